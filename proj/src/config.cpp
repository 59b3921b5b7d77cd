#include "fpcav/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include "fpcav/units.hpp"

namespace fpcav {

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

enum class Kind { Length, Frequency, Number, Integer, Bool, Name, Layer };

struct KeySpec {
    const char* section;
    const char* key;
    Kind kind;
    const char* fallback;
    const char* meaning;
};

// Mirror keys are shared by [coating], [flat_mirror] and [fiber_mirror].
const std::vector<KeySpec>& key_table() {
    static const std::vector<KeySpec> table = [] {
        std::vector<KeySpec> t{
            {"cavity", "preset", Kind::Name, "(none)", "base geometry: membrane, lossy-membrane, projected or bare"},
            {"cavity", "length", Kind::Length, "required without preset", "flat-mirror to fiber-mirror distance L"},
            {"cavity", "membrane_thickness", Kind::Length, "0 um", "membrane thickness t_d (0 <= t_d < L)"},
            {"cavity", "membrane_index", Kind::Number, "2.417", "real index of the membrane"},
            {"cavity", "membrane_absorption", Kind::Number, "0", "imaginary index of the membrane"},
            {"cavity", "fiber_roc", Kind::Length, "61 um", "fiber-mirror radius of curvature"},
            {"cavity", "sigma_air_diamond", Kind::Length, "0 nm", "rms roughness of the membrane surface"},
            {"cavity", "sigma_diamond_mirror", Kind::Length, "0 nm", "rms roughness of the bonded interface"},
            {"cavity", "gouy", Kind::Bool, "true", "insert Gouy phases of the matched mode"},
            {"cavity", "loss", Kind::Name, "lossless",
             "loss preset: lossless, mirror-absorption, air-diamond-roughness, diamond-mirror-roughness, "
             "diamond-absorption, lossy-membrane"},
            {"scan", "wavelength", Kind::Length, "637 nm", "laser wavelength for fixed-wavelength sweeps"},
            {"scan", "wavelength_lo", Kind::Length, "one membrane period around 637 nm", "wavelength sweep start"},
            {"scan", "wavelength_hi", Kind::Length, "one membrane period around 637 nm", "wavelength sweep end"},
            {"scan", "length_lo", Kind::Length, "12 um", "length sweep start"},
            {"scan", "length_hi", Kind::Length, "32 um", "length sweep end"},
            {"scan", "frequency_lo", Kind::Frequency, "440 THz", "frequency window start"},
            {"scan", "frequency_hi", Kind::Frequency, "500 THz", "frequency window end"},
            {"scan", "points", Kind::Integer, "201", "samples per sweep axis"},
            {"run", "jobs", Kind::Integer, "1", "worker threads (>= 1); output does not depend on it"},
            {"run", "seed", Kind::Integer, "0", "seed for synthetic data"},
        };
        for (const char* sec : {"coating", "flat_mirror", "fiber_mirror"}) {
            t.push_back({sec, "n_high", Kind::Number, "2.10", "high index of the quarter-wave stack"});
            t.push_back({sec, "n_low", Kind::Number, "1.472", "low index of the quarter-wave stack"});
            t.push_back({sec, "substrate", Kind::Number, "1.45", "substrate index"});
            t.push_back({sec, "layers", Kind::Integer, "29", "layer count"});
            t.push_back({sec, "design_wavelength", Kind::Length, "637 nm", "quarter-wave design wavelength"});
            t.push_back({sec, "termination", Kind::Name, "high", "index of the layer facing the cavity: high or low"});
            t.push_back({sec, "absorption", Kind::Number, "0", "imaginary index added to every layer"});
            if (std::string_view(sec) != "coating")
                t.push_back({sec, "layer", Kind::Layer, "(none)",
                             "explicit layer 're, im, thickness', repeatable, substrate side first"});
        }
        return t;
    }();
    return table;
}

const KeySpec* find_key(std::string_view section, std::string_view key) {
    for (const auto& k : key_table())
        if (section == k.section && key == k.key) return &k;
    return nullptr;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

struct Entry {
    std::string section, key, value;
    int line;
};

class Parsed {
public:
    Parsed(std::string_view text, std::string source) : source_(std::move(source)) {
        std::istringstream in{std::string(text)};
        std::string raw;
        std::string section;
        int line_no = 0;
        std::set<std::pair<std::string, std::string>> seen;
        while (std::getline(in, raw)) {
            ++line_no;
            if (auto h = raw.find('#'); h != std::string::npos) raw.erase(h);
            auto line = trim(raw);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') fail(line_no, "unterminated section header");
                section = std::string(trim(line.substr(1, line.size() - 2)));
                bool known = false;
                for (const auto& k : key_table()) known = known || section == k.section;
                if (!known) fail(line_no, "unknown section [" + section + "]");
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) fail(line_no, "expected 'key = value'");
            const std::string key(trim(line.substr(0, eq)));
            const std::string value(trim(line.substr(eq + 1)));
            if (section.empty()) fail(line_no, "key '" + key + "' outside any section");
            const KeySpec* spec = find_key(section, key);
            if (!spec) fail(line_no, "unknown key '" + key + "' in [" + section + "]");
            if (value.empty()) fail(line_no, "empty value for '" + key + "'");
            if (spec->kind != Kind::Layer && !seen.insert({section, key}).second)
                fail(line_no, "duplicate key '" + key + "' in [" + section + "]");
            entries_.push_back({section, key, value, line_no});
        }
    }

    [[noreturn]] void fail(int line, const std::string& msg) const {
        throw InvalidConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
    }

    const Entry* get(std::string_view section, std::string_view key) const {
        for (const auto& e : entries_)
            if (e.section == section && e.key == key) return &e;
        return nullptr;
    }

    std::vector<const Entry*> all(std::string_view section, std::string_view key) const {
        std::vector<const Entry*> out;
        for (const auto& e : entries_)
            if (e.section == section && e.key == key) out.push_back(&e);
        return out;
    }

    bool has_section(std::string_view section) const {
        for (const auto& e : entries_)
            if (e.section == section) return true;
        return false;
    }

    template <class Fn>
    auto convert(const Entry& e, Fn&& fn) const {
        try {
            return fn(e.value);
        } catch (const InvalidConfigError& err) {
            fail(e.line, e.key + ": " + err.what());
        }
    }

    std::optional<double> quantity(std::string_view section, std::string_view key) const {
        const Entry* e = get(section, key);
        if (!e) return std::nullopt;
        const Kind k = find_key(section, key)->kind;
        const Dimension dim = k == Kind::Length      ? Dimension::Length
                              : k == Kind::Frequency ? Dimension::Frequency
                                                     : Dimension::Dimensionless;
        return convert(*e, [&](const std::string& v) { return parse_quantity(v, dim); });
    }

    std::optional<long long> integer(std::string_view section, std::string_view key) const {
        const Entry* e = get(section, key);
        if (!e) return std::nullopt;
        return convert(*e, [&](const std::string& v) {
            const double x = parse_number(v);
            if (x != static_cast<double>(static_cast<long long>(x)))
                throw InvalidConfigError("expected an integer, got '" + v + "'");
            return static_cast<long long>(x);
        });
    }

    std::optional<bool> boolean(std::string_view section, std::string_view key) const {
        const Entry* e = get(section, key);
        if (!e) return std::nullopt;
        if (e->value == "true" || e->value == "yes" || e->value == "1") return true;
        if (e->value == "false" || e->value == "no" || e->value == "0") return false;
        fail(e->line, e->key + ": expected true or false");
    }

    std::optional<std::string> name(std::string_view section, std::string_view key) const {
        const Entry* e = get(section, key);
        if (!e) return std::nullopt;
        return e->value;
    }

    int line_of(std::string_view section, std::string_view key) const {
        const Entry* e = get(section, key);
        return e ? e->line : 0;
    }

private:
    std::string source_;
    std::vector<Entry> entries_;
};

CoatingDesign apply_coating_keys(const Parsed& p, std::string_view sec, CoatingDesign d) {
    if (auto v = p.quantity(sec, "n_high")) d.n_high = *v;
    if (auto v = p.quantity(sec, "n_low")) d.n_low = *v;
    if (auto v = p.quantity(sec, "substrate")) d.substrate = *v;
    if (auto v = p.integer(sec, "layers")) d.layer_count = static_cast<int>(*v);
    if (auto v = p.quantity(sec, "design_wavelength")) d.design_wavelength = *v;
    if (auto v = p.name(sec, "termination"))
        d.termination = p.convert(*p.get(sec, "termination"), [](const std::string& s) { return parse_termination(s); });
    if (auto v = p.quantity(sec, "absorption")) d.absorption = *v;
    return d;
}

bool has_coating_keys(const Parsed& p, std::string_view sec) {
    for (const char* k : {"n_high", "n_low", "substrate", "layers", "design_wavelength", "termination", "absorption"})
        if (p.get(sec, k)) return true;
    return false;
}

MirrorStack build_mirror(const Parsed& p, std::string_view sec, const CoatingDesign& shared, const MirrorStack& base,
                         bool shared_given) {
    const auto layers = p.all(sec, "layer");
    if (!layers.empty()) {
        std::string table;
        if (auto v = p.quantity(sec, "substrate")) table += "substrate " + std::to_string(*v) + "\n";
        if (auto v = p.name(sec, "termination")) table += "termination " + *v + "\n";
        for (const Entry* e : layers) {
            std::string row = e->value;
            for (char& c : row)
                if (c == ',') c = ' ';
            table += row + "\n";
        }
        try {
            return parse_stack_table(table);
        } catch (const InvalidConfigError& err) {
            p.fail(layers.front()->line, std::string("[") + std::string(sec) + "] layers: " + err.what());
        }
    }
    if (!has_coating_keys(p, sec)) return shared_given ? shared.build() : base;
    const int line = [&] {
        for (const char* k : {"n_high", "n_low", "substrate", "layers", "design_wavelength", "termination", "absorption"})
            if (int l = p.line_of(sec, k)) return l;
        return 0;
    }();
    try {
        return apply_coating_keys(p, sec, shared).build();
    } catch (const InvalidConfigError& err) {
        p.fail(line, std::string("[") + std::string(sec) + "]: " + err.what());
    }
}

}  // namespace

RunConfig preset_config(std::string_view preset) {
    RunConfig rc;
    rc.preset = std::string(preset);
    const bool lossy = preset == "lossy-membrane";
    rc.geometry = cavity_preset(lossy ? "membrane" : preset);
    rc.losses = loss_preset(lossy ? LossPreset::LossyMembrane : LossPreset::Lossless);
    rc.loss = lossy ? "lossy-membrane" : "lossless";
    rc.cavity = apply_losses(rc.geometry, rc.losses);
    rc.window = reference_window(rc.cavity);
    return rc;
}

RunConfig parse_config(std::string_view text, const std::string& source) {
    const Parsed p(text, source);
    RunConfig rc;
    const auto preset = p.name("cavity", "preset");
    if (preset) {
        try {
            rc = preset_config(*preset);
        } catch (const InvalidConfigError& err) {
            p.fail(p.line_of("cavity", "preset"), err.what());
        }
    } else {
        rc.preset = "none";
        rc.geometry = reference_cavity();
        rc.geometry.membrane_thickness = 0.0;
        if (!p.get("cavity", "length"))
            throw InvalidConfigError(source + ": missing required key 'length' in [cavity] (or give a preset)");
    }
    CavityConfig& c = rc.geometry;

    const bool shared_given = has_coating_keys(p, "coating");
    const CoatingDesign shared = apply_coating_keys(p, "coating", CoatingDesign{});
    c.flat_mirror = build_mirror(p, "flat_mirror", shared, c.flat_mirror, shared_given);
    c.fiber_mirror = build_mirror(p, "fiber_mirror", shared, c.fiber_mirror, shared_given);

    if (auto v = p.quantity("cavity", "length")) c.length = *v;
    if (auto v = p.quantity("cavity", "membrane_thickness")) c.membrane_thickness = *v;
    if (auto v = p.quantity("cavity", "fiber_roc")) c.fiber_roc = *v;
    if (auto v = p.boolean("cavity", "gouy")) c.guoy_enabled = *v;
    {
        double re = c.membrane.real(), im = c.membrane.imag();
        if (auto v = p.quantity("cavity", "membrane_index")) re = *v;
        if (auto v = p.quantity("cavity", "membrane_absorption")) im = *v;
        const Entry* e = p.get("cavity", "membrane_index");
        if (!e) e = p.get("cavity", "membrane_absorption");
        if (e) c.membrane = p.convert(*e, [&](const std::string&) { return OpticalMedium(Complex(re, im)); });
    }
    if (auto name = p.name("cavity", "loss")) {
        const auto loss = p.convert(*p.get("cavity", "loss"), [](const std::string& s) { return parse_loss_preset(s); });
        rc.losses = loss_preset(loss);
        rc.loss = *name;
    }
    if (auto v = p.quantity("cavity", "sigma_air_diamond")) rc.losses.sigma_air_diamond = *v;
    if (auto v = p.quantity("cavity", "sigma_diamond_mirror")) rc.losses.sigma_diamond_mirror = *v;
    rc.cavity = apply_losses(rc.geometry, rc.losses);

    // Invariants, reported against the key that carries them.
    const CavityConfig& r = rc.cavity;
    if (!(r.length > 0.0)) p.fail(p.line_of("cavity", "length"), "length must be positive");
    if (r.membrane_thickness < 0.0 || !(r.membrane_thickness < r.length)) {
        const int line = p.line_of("cavity", "membrane_thickness") ? p.line_of("cavity", "membrane_thickness")
                                                                    : p.line_of("cavity", "length");
        p.fail(line, "invariant 0 <= membrane_thickness < length violated");
    }
    if (r.sigma_air_diamond < 0.0 || r.sigma_diamond_mirror < 0.0)
        p.fail(std::max(p.line_of("cavity", "sigma_air_diamond"), p.line_of("cavity", "sigma_diamond_mirror")),
               "roughness must be non-negative");
    try {
        r.validate();
    } catch (const Error& err) {
        p.fail(p.line_of("cavity", "fiber_roc") ? p.line_of("cavity", "fiber_roc") : p.line_of("cavity", "length"),
               std::string("cavity: ") + err.what());
    }

    rc.window = reference_window(c);
    if (auto v = p.quantity("scan", "wavelength")) rc.wavelength = *v;
    if (auto v = p.quantity("scan", "wavelength_lo")) rc.window.wavelength_lo = *v;
    if (auto v = p.quantity("scan", "wavelength_hi")) rc.window.wavelength_hi = *v;
    if (auto v = p.quantity("scan", "length_lo")) rc.window.length_lo = *v;
    if (auto v = p.quantity("scan", "length_hi")) rc.window.length_hi = *v;
    if (auto v = p.quantity("scan", "frequency_lo")) rc.window.frequency_lo = *v;
    if (auto v = p.quantity("scan", "frequency_hi")) rc.window.frequency_hi = *v;
    if (auto v = p.integer("scan", "points")) rc.points = static_cast<int>(*v);
    auto ordered = [&](double lo, double hi, const char* klo, const char* khi) {
        if (!(lo > 0.0 && hi > lo))
            p.fail(std::max(p.line_of("scan", klo), p.line_of("scan", khi)),
                   std::string("invariant 0 < ") + klo + " < " + khi + " violated");
    };
    ordered(rc.window.wavelength_lo, rc.window.wavelength_hi, "wavelength_lo", "wavelength_hi");
    ordered(rc.window.length_lo, rc.window.length_hi, "length_lo", "length_hi");
    ordered(rc.window.frequency_lo, rc.window.frequency_hi, "frequency_lo", "frequency_hi");
    if (!(rc.wavelength > 0.0)) p.fail(p.line_of("scan", "wavelength"), "wavelength must be positive");
    if (rc.points < 2) p.fail(p.line_of("scan", "points"), "points must be at least 2");

    if (auto v = p.integer("run", "jobs")) {
        if (*v < 1) p.fail(p.line_of("run", "jobs"), "jobs must be at least 1");
        rc.jobs = static_cast<int>(*v);
    }
    if (auto v = p.integer("run", "seed")) {
        if (*v < 0) p.fail(p.line_of("run", "seed"), "seed must be non-negative");
        rc.seed = static_cast<std::uint64_t>(*v);
    }
    return rc;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

namespace {

void put(std::ostringstream& o, const char* key, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    o << key << " = " << buf << "\n";
}

void put_stack(std::ostringstream& o, const char* name, const MirrorStack& s) {
    o << name << ".termination = " << to_string(s.termination) << "\n";
    put(o, (std::string(name) + ".substrate.re").c_str(), s.substrate.real());
    put(o, (std::string(name) + ".substrate.im").c_str(), s.substrate.imag());
    for (size_t i = 0; i < s.layers.size(); ++i) {
        const std::string k = std::string(name) + ".layer" + std::to_string(i);
        put(o, (k + ".re").c_str(), s.layers[i].medium.real());
        put(o, (k + ".im").c_str(), s.layers[i].medium.imag());
        put(o, (k + ".d").c_str(), s.layers[i].thickness);
    }
}

}  // namespace

std::string RunConfig::canonical() const {
    std::ostringstream o;
    o << "preset = " << preset << "\nloss = " << loss << "\n";
    put(o, "length", cavity.length);
    put(o, "membrane_thickness", cavity.membrane_thickness);
    put(o, "membrane.re", cavity.membrane.real());
    put(o, "membrane.im", cavity.membrane.imag());
    put(o, "fiber_roc", cavity.fiber_roc);
    put(o, "sigma_air_diamond", cavity.sigma_air_diamond);
    put(o, "sigma_diamond_mirror", cavity.sigma_diamond_mirror);
    o << "gouy = " << (cavity.guoy_enabled ? "true" : "false") << "\n";
    put_stack(o, "flat", cavity.flat_mirror);
    put_stack(o, "fiber", cavity.fiber_mirror);
    put(o, "wavelength", wavelength);
    put(o, "wavelength_lo", window.wavelength_lo);
    put(o, "wavelength_hi", window.wavelength_hi);
    put(o, "length_lo", window.length_lo);
    put(o, "length_hi", window.length_hi);
    put(o, "frequency_lo", window.frequency_lo);
    put(o, "frequency_hi", window.frequency_hi);
    o << "points = " << points << "\nseed = " << seed << "\n";
    // jobs is deliberately excluded: results do not depend on it.
    return o.str();
}

void RunConfig::set_loss(std::string_view name) {
    losses = loss_preset(parse_loss_preset(name));
    loss = std::string(name);
    cavity = apply_losses(geometry, losses);
}

std::uint64_t RunConfig::hash() const { return fnv1a(canonical()); }

std::string config_reference() {
    std::ostringstream o;
    o << "# Configuration reference\n\n"
      << "INI-style file. Lengths need a unit (m, mm, um, nm, pm), frequencies too (Hz ... THz).\n"
      << "'#' starts a comment. Unknown sections or keys are errors.\n"
      << "Without `preset` the base is a bare cavity (t_d = 0) with the default coating, and `length` is required.\n\n";
    std::string current;
    for (const auto& k : key_table()) {
        if (current != k.section) {
            current = k.section;
            o << "\n## [" << current << "]\n\n| key | type | default | meaning |\n|---|---|---|---|\n";
        }
        const char* type = "";
        switch (k.kind) {
            case Kind::Length: type = "length"; break;
            case Kind::Frequency: type = "frequency"; break;
            case Kind::Number: type = "number"; break;
            case Kind::Integer: type = "integer"; break;
            case Kind::Bool: type = "bool"; break;
            case Kind::Name: type = "name"; break;
            case Kind::Layer: type = "layer row"; break;
        }
        o << "| " << k.key << " | " << type << " | " << k.fallback << " | " << k.meaning << " |\n";
    }
    return o.str();
}

}  // namespace fpcav
