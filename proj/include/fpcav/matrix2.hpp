#pragma once

#include "fpcav/core.hpp"

namespace fpcav {

// Amplitudes of the right-moving (forward) and left-moving (backward) waves.
struct FieldAmplitudes {
    Complex forward;
    Complex backward;
};

// Maps amplitudes on the left of an element to amplitudes on its right.
struct TransferMatrix {
    Complex m11{1.0}, m12{0.0}, m21{0.0}, m22{1.0};

    static TransferMatrix identity() { return {}; }
    static TransferMatrix diagonal(Complex a, Complex b) { return {a, 0.0, 0.0, b}; }

    Complex det() const { return m11 * m22 - m12 * m21; }

    TransferMatrix inverse() const {
        const Complex d = det();
        return {m22 / d, -m12 / d, -m21 / d, m11 / d};
    }

    FieldAmplitudes apply(const FieldAmplitudes& v) const {
        return {m11 * v.forward + m12 * v.backward, m21 * v.forward + m22 * v.backward};
    }

    double max_abs() const;

    friend TransferMatrix operator*(const TransferMatrix& a, const TransferMatrix& b) {
        return {a.m11 * b.m11 + a.m12 * b.m21, a.m11 * b.m12 + a.m12 * b.m22,
                a.m21 * b.m11 + a.m22 * b.m21, a.m21 * b.m12 + a.m22 * b.m22};
    }
};

inline double TransferMatrix::max_abs() const {
    double m = std::abs(m11);
    if (std::abs(m12) > m) m = std::abs(m12);
    if (std::abs(m21) > m) m = std::abs(m21);
    if (std::abs(m22) > m) m = std::abs(m22);
    return m;
}

}  // namespace fpcav
