#pragma once

// Experiment configs (one JSON format with a "kind" discriminator), the
// report builders behind each workbench subcommand, and the orbit cache.
// Needs nlohmann/json on the include path.

#include "dynwork/atiyah.hpp"
#include "dynwork/cone.hpp"
#include "dynwork/error.hpp"
#include "dynwork/good_eigenspace.hpp"
#include "dynwork/heights.hpp"
#include "dynwork/matrix.hpp"
#include "dynwork/model.hpp"
#include "dynwork/spectrum.hpp"

#include <gmp.h>
#include <mpfr.h>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace dynwork::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Schema helpers. Paths look like "components[1].F_coeffs".

namespace schema {

inline std::string at(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
inline std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
    throw SchemaError((path.empty() ? std::string("<root>") : path) + ": " + what);
}

inline void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) fail(at(path, key), "unknown field");
    }
}

inline const json& require(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) fail(at(path, key), "missing required field");
    return j.at(key);
}

inline Integer integer(const json& j, const std::string& path) {
    if (j.is_number_integer()) return j.is_number_unsigned() ? Integer(std::to_string(j.get<std::uint64_t>()))
                                                             : Integer(std::to_string(j.get<std::int64_t>()));
    if (j.is_string()) {
        Integer z;
        if (z.set_str(j.get<std::string>(), 10) != 0) fail(path, "not a decimal integer");
        return z;
    }
    fail(path, "expected an integer");
}

inline long small_int(const json& j, const std::string& path, long lo, long hi) {
    const Integer z = integer(j, path);
    if (!z.fits_slong_p() || z < lo || z > hi)
        fail(path, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return z.get_si();
}

inline double real(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

inline Rational rational(const json& j, const std::string& path) {
    if (j.is_number_integer()) return Rational(integer(j, path));
    if (j.is_string()) {
        Rational q;
        try {
            q = Rational(j.get<std::string>());
        } catch (const std::exception&) {
            fail(path, "not a rational \"p/q\"");
        }
        if (q.get_den() == 0) fail(path, "zero denominator");
        q.canonicalize();
        return q;
    }
    fail(path, "expected a rational (integer or \"p/q\" string)");
}

inline ZVector vector(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of integers");
    ZVector v;
    for (std::size_t i = 0; i < j.size(); ++i) v.push_back(integer(j[i], at(path, i)));
    return v;
}

inline std::vector<ZVector> rows(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a nonempty array of rows");
    std::vector<ZVector> r;
    for (std::size_t i = 0; i < j.size(); ++i) {
        r.push_back(vector(j[i], at(path, i)));
        if (r.back().size() != r.front().size()) fail(at(path, i), "row length differs from row 0");
    }
    if (r.front().empty()) fail(path, "rows are empty");
    return r;
}

inline IntMatrix square_matrix(const json& j, const std::string& path) {
    const auto r = rows(j, path);
    if (r.size() != r.front().size()) fail(path, "matrix must be square");
    return IntMatrix::from_rows(r);
}

inline json integer_json(const Integer& z) {
    if (z.fits_slong_p()) return json(z.get_si());
    return json(z.get_str());
}

inline json vector_json(const ZVector& v) {
    json a = json::array();
    for (const auto& z : v) a.push_back(integer_json(z));
    return a;
}

inline json rows_json(const std::vector<ZVector>& r) {
    json a = json::array();
    for (const auto& v : r) a.push_back(vector_json(v));
    return a;
}

inline json matrix_json(const IntMatrix& m) {
    std::vector<ZVector> r;
    for (std::size_t i = 0; i < m.rows(); ++i) r.push_back(m.row(i));
    return rows_json(r);
}

}  // namespace schema

// ---------------------------------------------------------------------------
// Typed payloads

struct SystemSpec {
    std::vector<std::size_t> perm;  // 1-based in the file, 0-based here
    std::vector<Component> components;

    static SystemSpec parse(const json& j, const std::string& path) {
        schema::check_keys(j, path, {"k", "perm", "components"});
        SystemSpec s;
        const long k = schema::small_int(schema::require(j, path, "k"), schema::at(path, "k"), 1, 16);
        const json& p = schema::require(j, path, "perm");
        if (!p.is_array() || p.size() != static_cast<std::size_t>(k)) schema::fail(schema::at(path, "perm"), "expected k entries");
        for (std::size_t i = 0; i < p.size(); ++i)
            s.perm.push_back(static_cast<std::size_t>(schema::small_int(p[i], schema::at(schema::at(path, "perm"), i), 1, k) - 1));
        const json& c = schema::require(j, path, "components");
        const std::string cp = schema::at(path, "components");
        if (!c.is_array() || c.size() != static_cast<std::size_t>(k)) schema::fail(cp, "expected k components");
        for (std::size_t i = 0; i < c.size(); ++i) {
            const std::string ip = schema::at(cp, i);
            schema::check_keys(c[i], ip, {"degree", "F_coeffs", "G_coeffs"});
            const long d = schema::small_int(schema::require(c[i], ip, "degree"), schema::at(ip, "degree"), 0, 64);
            Component comp;
            comp.degree = static_cast<std::size_t>(d);
            for (const char* key : {"F_coeffs", "G_coeffs"}) {
                ZVector v = schema::vector(schema::require(c[i], ip, key), schema::at(ip, key));
                if (v.size() != comp.degree + 1)
                    schema::fail(schema::at(ip, key), "expected " + std::to_string(d + 1) + " coefficients (x^i y^(d-i), i ascending)");
                (std::string(key) == "F_coeffs" ? comp.f : comp.g) = BinaryForm(comp.degree, std::move(v));
            }
            s.components.push_back(std::move(comp));
        }
        return s;
    }
    json to_json() const {
        json j;
        j["k"] = perm.size();
        json p = json::array();
        for (auto v : perm) p.push_back(v + 1);
        j["perm"] = p;
        json cs = json::array();
        for (const auto& c : components)
            cs.push_back({{"degree", c.degree}, {"F_coeffs", schema::vector_json(c.f.coeffs())}, {"G_coeffs", schema::vector_json(c.g.coeffs())}});
        j["components"] = cs;
        return j;
    }
    ModelSystem build() const { return build_system(perm, components); }
};

inline ProjPoint parse_point(const json& j, const std::string& path, std::size_t k) {
    if (!j.is_array() || j.size() != k) schema::fail(path, "expected " + std::to_string(k) + " coordinate pairs [x, y]");
    std::vector<ProjPoint::Coord> c;
    for (std::size_t i = 0; i < k; ++i) {
        const std::string ip = schema::at(path, i);
        if (!j[i].is_array() || j[i].size() != 2) schema::fail(ip, "expected a pair [x, y]");
        Integer x = schema::integer(j[i][0], schema::at(ip, 0)), y = schema::integer(j[i][1], schema::at(ip, 1));
        if (sgn(x) == 0 && sgn(y) == 0) schema::fail(ip, "(0:0) is not a point");
        c.emplace_back(std::move(x), std::move(y));
    }
    return ProjPoint(std::move(c));
}

inline json point_json(const ProjPoint& p) {
    json a = json::array();
    for (const auto& [x, y] : p.coords()) a.push_back(json::array({schema::integer_json(x), schema::integer_json(y)}));
    return a;
}

inline DivisorClass parse_class(const json& j, const std::string& path, std::size_t k) {
    if (!j.is_array() || j.size() != k) schema::fail(path, "expected " + std::to_string(k) + " integers");
    DivisorClass d;
    for (std::size_t i = 0; i < k; ++i) d.push_back(schema::small_int(j[i], schema::at(path, i), -1000000, 1000000));
    return d;
}

struct BundleSpec {
    std::vector<Pic0Generator> generators;
    std::vector<std::pair<unsigned, std::map<std::string, long>>> terms;

    static std::vector<Pic0Generator> parse_generators(const json& j, const std::string& path) {
        if (!j.is_array()) schema::fail(path, "expected an array of {name, order}");
        std::vector<Pic0Generator> g;
        for (std::size_t i = 0; i < j.size(); ++i) {
            const std::string ip = schema::at(path, i);
            schema::check_keys(j[i], ip, {"name", "order"});
            const json& n = schema::require(j[i], ip, "name");
            if (!n.is_string() || n.get<std::string>().empty()) schema::fail(schema::at(ip, "name"), "expected a nonempty string");
            long order = j[i].contains("order") ? schema::small_int(j[i]["order"], schema::at(ip, "order"), 0, 1000000) : 0;
            if (order == 1) schema::fail(schema::at(ip, "order"), "order 1 is the trivial bundle; use 0 (infinite) or >= 2");
            for (const auto& prev : g)
                if (prev.name == n.get<std::string>()) schema::fail(schema::at(ip, "name"), "duplicate generator");
            g.push_back({n.get<std::string>(), order});
        }
        return g;
    }
    static std::vector<std::pair<unsigned, std::map<std::string, long>>> parse_terms(const json& j, const std::string& path,
                                                                                     const std::vector<Pic0Generator>& gens) {
        schema::check_keys(j, path, {"terms"});
        const json& t = schema::require(j, path, "terms");
        const std::string tp = schema::at(path, "terms");
        if (!t.is_array() || t.empty()) schema::fail(tp, "expected a nonempty array of {r, twist}");
        std::vector<std::pair<unsigned, std::map<std::string, long>>> out;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const std::string ip = schema::at(tp, i);
            schema::check_keys(t[i], ip, {"r", "twist"});
            const long r = schema::small_int(schema::require(t[i], ip, "r"), schema::at(ip, "r"), 1, 64);
            std::map<std::string, long> tw;
            if (t[i].contains("twist")) {
                const json& w = t[i]["twist"];
                if (!w.is_object()) schema::fail(schema::at(ip, "twist"), "expected {generator: exponent}");
                for (const auto& [name, e] : w.items()) {
                    bool known = false;
                    for (const auto& g : gens) known = known || g.name == name;
                    if (!known) schema::fail(schema::at(schema::at(ip, "twist"), name), "unknown generator");
                    tw[name] = schema::small_int(e, schema::at(schema::at(ip, "twist"), name), -1000000, 1000000);
                }
            }
            out.emplace_back(static_cast<unsigned>(r), std::move(tw));
        }
        return out;
    }
    static json generators_json(const std::vector<Pic0Generator>& g) {
        json a = json::array();
        for (const auto& x : g) a.push_back({{"name", x.name}, {"order", x.order}});
        return a;
    }
    static json terms_json(const std::vector<std::pair<unsigned, std::map<std::string, long>>>& terms) {
        json a = json::array();
        for (const auto& [r, tw] : terms) {
            json t{{"r", r}};
            if (!tw.empty()) {
                json w = json::object();
                for (const auto& [n, e] : tw) w[n] = e;
                t["twist"] = w;
            }
            a.push_back(t);
        }
        return json{{"terms", a}};
    }
    static AtiyahExpr build(const Pic0Group& g, const std::vector<std::pair<unsigned, std::map<std::string, long>>>& terms) {
        std::vector<AtiyahTerm> ts;
        for (const auto& [r, tw] : terms) {
            Pic0Element e = g.identity();
            for (const auto& [n, x] : tw) e[*g.index_of(n)] += x;
            ts.push_back({r, g.reduce(e)});
        }
        return AtiyahExpr(std::move(ts));
    }
};

struct SpectrumPayload {
    IntMatrix matrix;
};

struct ConePayload {
    IntMatrix matrix;
    std::vector<ZVector> rays;
    std::optional<Rational> lambda;
};

struct OrbitPayload {
    SystemSpec system;
    ProjPoint point;
    std::size_t n = 10;
};

struct PlantedSpec {
    Rational lambda;
    std::size_t size = 2;
    double noise = 0.1;
    std::size_t n = 60;
};

struct HeightsPayload {
    std::optional<SystemSpec> system;
    std::vector<ProjPoint> points;
    std::optional<DivisorClass> h;
    std::size_t n_max = 15;
    double tau = 1e-8;
    std::optional<PlantedSpec> planted;
};

struct SurveyPayload {
    SystemSpec system;
    long bound = 10;
    std::size_t sample = 0;
    std::optional<DivisorClass> h;
};

struct AtiyahPayload {
    std::vector<Pic0Generator> generators;
    std::vector<std::pair<unsigned, std::map<std::string, long>>> bundle;
    std::optional<unsigned> sym;
    std::optional<std::pair<unsigned, unsigned>> tensor;
    std::optional<unsigned> anticanonical_m;
    std::optional<unsigned> m_max;
};

struct KappaAssignmentSpec {
    ZVector divisor;
    std::vector<std::pair<unsigned, std::map<std::string, long>>> bundle;
};

struct GoodEigenspacePayload {
    std::optional<SystemSpec> system;
    std::optional<IntMatrix> matrix;
    std::vector<ZVector> cone;
    std::optional<ZVector> h;
    std::string oracle = "model";
    std::vector<Pic0Generator> generators;
    std::vector<KappaAssignmentSpec> assignments;
    unsigned m_max = 6;
};

struct Settings {
    std::uint64_t seed = 1;
    long precision = kDefaultPrecisionBits;
    std::size_t digit_budget = kDefaultDigitBudget;
    long width_bits = 40;
    bool log_heights_only = false;
};

using Payload = std::variant<SpectrumPayload, ConePayload, OrbitPayload, HeightsPayload, SurveyPayload, AtiyahPayload,
                             GoodEigenspacePayload>;

struct ExperimentConfig {
    std::string kind;
    Settings settings;
    Payload payload;
};

inline const std::vector<std::string>& kinds() {
    static const std::vector<std::string> k{"spectrum", "cone", "orbit", "heights", "survey", "atiyah", "good-eigenspace"};
    return k;
}

namespace detail {

inline void parse_settings(const json& j, Settings& s) {
    if (j.contains("seed")) {
        const Integer z = schema::integer(j["seed"], "seed");
        if (sgn(z) < 0 || mpz_sizeinbase(z.get_mpz_t(), 2) > 64) schema::fail("seed", "must be an unsigned 64-bit integer");
        s.seed = std::stoull(z.get_str());
    }
    if (j.contains("precision")) s.precision = schema::small_int(j["precision"], "precision", 32, 1 << 16);
    if (j.contains("digit_budget"))
        s.digit_budget = static_cast<std::size_t>(schema::small_int(j["digit_budget"], "digit_budget", 1, 100000000));
    if (j.contains("width_bits")) s.width_bits = schema::small_int(j["width_bits"], "width_bits", 4, 4096);
    if (j.contains("log_heights_only")) {
        if (!j["log_heights_only"].is_boolean()) schema::fail("log_heights_only", "expected true or false");
        s.log_heights_only = j["log_heights_only"].get<bool>();
    }
}

inline void settings_json(const Settings& s, json& j) {
    j["seed"] = s.seed;
    j["precision"] = s.precision;
    j["digit_budget"] = s.digit_budget;
    j["width_bits"] = s.width_bits;
    j["log_heights_only"] = s.log_heights_only;
}

#define DYNWORK_SETTING_KEYS "kind", "seed", "precision", "digit_budget", "width_bits", "log_heights_only"

inline Payload parse_payload(const std::string& kind, const json& j) {
    if (kind == "spectrum") {
        schema::check_keys(j, "", {DYNWORK_SETTING_KEYS, "matrix"});
        return SpectrumPayload{schema::square_matrix(schema::require(j, "", "matrix"), "matrix")};
    }
    if (kind == "cone") {
        schema::check_keys(j, "", {DYNWORK_SETTING_KEYS, "matrix", "rays", "lambda"});
        ConePayload p{schema::square_matrix(schema::require(j, "", "matrix"), "matrix"),
                      schema::rows(schema::require(j, "", "rays"), "rays"), std::nullopt};
        if (p.rays.front().size() != p.matrix.rows()) schema::fail("rays", "ray length differs from matrix size");
        if (j.contains("lambda")) p.lambda = schema::rational(j["lambda"], "lambda");
        return p;
    }
    if (kind == "orbit") {
        schema::check_keys(j, "", {DYNWORK_SETTING_KEYS, "system", "point", "n"});
        OrbitPayload p;
        p.system = SystemSpec::parse(schema::require(j, "", "system"), "system");
        p.point = parse_point(schema::require(j, "", "point"), "point", p.system.perm.size());
        if (j.contains("n")) p.n = static_cast<std::size_t>(schema::small_int(j["n"], "n", 0, 10000));
        return p;
    }
    if (kind == "heights") {
        schema::check_keys(j, "", {DYNWORK_SETTING_KEYS, "system", "points", "h", "n_max", "tau", "planted"});
        HeightsPayload p;
        if (j.contains("planted")) {
            const json& q = j["planted"];
            schema::check_keys(q, "planted", {"lambda", "size", "noise", "n"});
            PlantedSpec s;
            s.lambda = schema::rational(schema::require(q, "planted", "lambda"), "planted.lambda");
            if (abs(s.lambda) <= 1) schema::fail("planted.lambda", "modulus must exceed 1");
            if (q.contains("size")) s.size = static_cast<std::size_t>(schema::small_int(q["size"], "planted.size", 1, 16));
            if (q.contains("noise")) s.noise = schema::real(q["noise"], "planted.noise");
            if (s.noise < 0) schema::fail("planted.noise", "must be nonnegative");
            if (q.contains("n")) s.n = static_cast<std::size_t>(schema::small_int(q["n"], "planted.n", 3, 10000));
            p.planted = s;
        }
        if (j.contains("system")) p.system = SystemSpec::parse(j["system"], "system");
        if (!p.system && !p.planted) schema::fail("", "heights needs either system+points or planted");
        if (p.system) {
            const std::size_t k = p.system->perm.size();
            const json& pts = schema::require(j, "", "points");
            if (!pts.is_array() || pts.empty()) schema::fail("points", "expected a nonempty array of points");
            for (std::size_t i = 0; i < pts.size(); ++i) p.points.push_back(parse_point(pts[i], schema::at("points", i), k));
            if (j.contains("h")) p.h = parse_class(j["h"], "h", k);
        } else if (j.contains("points") || j.contains("h")) {
            schema::fail("points", "points need a system");
        }
        if (j.contains("n_max")) p.n_max = static_cast<std::size_t>(schema::small_int(j["n_max"], "n_max", 2, 10000));
        if (j.contains("tau")) p.tau = schema::real(j["tau"], "tau");
        return p;
    }
    if (kind == "survey") {
        schema::check_keys(j, "", {DYNWORK_SETTING_KEYS, "system", "bound", "sample", "h"});
        SurveyPayload p;
        p.system = SystemSpec::parse(schema::require(j, "", "system"), "system");
        p.bound = schema::small_int(schema::require(j, "", "bound"), "bound", 1, 100000);
        if (j.contains("sample")) p.sample = static_cast<std::size_t>(schema::small_int(j["sample"], "sample", 0, 10000000));
        if (j.contains("h")) p.h = parse_class(j["h"], "h", p.system.perm.size());
        return p;
    }
    if (kind == "atiyah") {
        schema::check_keys(j, "", {DYNWORK_SETTING_KEYS, "generators", "bundle", "sym", "tensor", "anticanonical_m", "m_max"});
        AtiyahPayload p;
        if (j.contains("generators")) p.generators = BundleSpec::parse_generators(j["generators"], "generators");
        p.bundle = BundleSpec::parse_terms(schema::require(j, "", "bundle"), "bundle", p.generators);
        if (j.contains("sym")) p.sym = static_cast<unsigned>(schema::small_int(j["sym"], "sym", 0, 64));
        if (j.contains("tensor")) {
            const json& t = j["tensor"];
            if (!t.is_array() || t.size() != 2) schema::fail("tensor", "expected [r, s]");
            p.tensor = std::make_pair(static_cast<unsigned>(schema::small_int(t[0], "tensor[0]", 1, 64)),
                                      static_cast<unsigned>(schema::small_int(t[1], "tensor[1]", 1, 64)));
        }
        if (j.contains("anticanonical_m"))
            p.anticanonical_m = static_cast<unsigned>(schema::small_int(j["anticanonical_m"], "anticanonical_m", 1, 64));
        if (j.contains("m_max")) p.m_max = static_cast<unsigned>(schema::small_int(j["m_max"], "m_max", 1, kMaxIitakaMultiple));
        return p;
    }
    if (kind == "good-eigenspace") {
        schema::check_keys(j, "", {DYNWORK_SETTING_KEYS, "system", "matrix", "cone", "h", "kappa"});
        GoodEigenspacePayload p;
        if (j.contains("system")) {
            if (j.contains("matrix") || j.contains("cone")) schema::fail("matrix", "give either system or matrix+cone, not both");
            p.system = SystemSpec::parse(j["system"], "system");
        } else {
            p.matrix = schema::square_matrix(schema::require(j, "", "matrix"), "matrix");
            p.cone = schema::rows(schema::require(j, "", "cone"), "cone");
            if (p.cone.front().size() != p.matrix->rows()) schema::fail("cone", "ray length differs from matrix size");
        }
        const std::size_t n = p.system ? p.system->perm.size() : p.matrix->rows();
        if (j.contains("h")) {
            p.h = schema::vector(j["h"], "h");
            if (p.h->size() != n) schema::fail("h", "length differs from dimension");
        }
        if (j.contains("kappa")) {
            const json& k = j["kappa"];
            schema::check_keys(k, "kappa", {"oracle", "generators", "assignments", "m_max"});
            const json& o = schema::require(k, "kappa", "oracle");
            if (!o.is_string() || (o != "model" && o != "atiyah")) schema::fail("kappa.oracle", "expected \"model\" or \"atiyah\"");
            p.oracle = o.get<std::string>();
            if (k.contains("generators")) p.generators = BundleSpec::parse_generators(k["generators"], "kappa.generators");
            if (k.contains("m_max")) p.m_max = static_cast<unsigned>(schema::small_int(k["m_max"], "kappa.m_max", 1, kMaxIitakaMultiple));
            if (k.contains("assignments")) {
                const json& a = k["assignments"];
                if (!a.is_array()) schema::fail("kappa.assignments", "expected an array");
                for (std::size_t i = 0; i < a.size(); ++i) {
                    const std::string ip = schema::at("kappa.assignments", i);
                    schema::check_keys(a[i], ip, {"divisor", "bundle"});
                    KappaAssignmentSpec s;
                    s.divisor = schema::vector(schema::require(a[i], ip, "divisor"), schema::at(ip, "divisor"));
                    if (s.divisor.size() != n) schema::fail(schema::at(ip, "divisor"), "length differs from dimension");
                    s.bundle = BundleSpec::parse_terms(schema::require(a[i], ip, "bundle"), schema::at(ip, "bundle"), p.generators);
                    p.assignments.push_back(std::move(s));
                }
            }
            if (p.oracle == "atiyah" && p.assignments.empty()) schema::fail("kappa.assignments", "the atiyah oracle needs assignments");
        } else if (!p.system) {
            schema::fail("kappa", "matrix+cone input needs an explicit kappa oracle");
        }
        return p;
    }
    schema::fail("kind", "unknown kind");
}

#undef DYNWORK_SETTING_KEYS

struct PayloadJson {
    json& j;
    void operator()(const SpectrumPayload& p) const { j["matrix"] = schema::matrix_json(p.matrix); }
    void operator()(const ConePayload& p) const {
        j["matrix"] = schema::matrix_json(p.matrix);
        j["rays"] = schema::rows_json(p.rays);
        if (p.lambda) j["lambda"] = rational_string(*p.lambda);
    }
    void operator()(const OrbitPayload& p) const {
        j["system"] = p.system.to_json();
        j["point"] = point_json(p.point);
        j["n"] = p.n;
    }
    void operator()(const HeightsPayload& p) const {
        if (p.system) {
            j["system"] = p.system->to_json();
            json pts = json::array();
            for (const auto& q : p.points) pts.push_back(point_json(q));
            j["points"] = pts;
            if (p.h) j["h"] = *p.h;
        }
        j["n_max"] = p.n_max;
        j["tau"] = p.tau;
        if (p.planted)
            j["planted"] = {{"lambda", rational_string(p.planted->lambda)}, {"size", p.planted->size},
                            {"noise", p.planted->noise}, {"n", p.planted->n}};
    }
    void operator()(const SurveyPayload& p) const {
        j["system"] = p.system.to_json();
        j["bound"] = p.bound;
        j["sample"] = p.sample;
        if (p.h) j["h"] = *p.h;
    }
    void operator()(const AtiyahPayload& p) const {
        j["generators"] = BundleSpec::generators_json(p.generators);
        j["bundle"] = BundleSpec::terms_json(p.bundle);
        if (p.sym) j["sym"] = *p.sym;
        if (p.tensor) j["tensor"] = json::array({p.tensor->first, p.tensor->second});
        if (p.anticanonical_m) j["anticanonical_m"] = *p.anticanonical_m;
        if (p.m_max) j["m_max"] = *p.m_max;
    }
    void operator()(const GoodEigenspacePayload& p) const {
        if (p.system) {
            j["system"] = p.system->to_json();
        } else {
            j["matrix"] = schema::matrix_json(*p.matrix);
            j["cone"] = schema::rows_json(p.cone);
        }
        if (p.h) j["h"] = schema::vector_json(*p.h);
        json k{{"oracle", p.oracle}};
        if (p.oracle == "atiyah") {
            k["generators"] = BundleSpec::generators_json(p.generators);
            json a = json::array();
            for (const auto& s : p.assignments)
                a.push_back({{"divisor", schema::vector_json(s.divisor)}, {"bundle", BundleSpec::terms_json(s.bundle)}});
            k["assignments"] = a;
            k["m_max"] = p.m_max;
        }
        j["kappa"] = k;
    }
};

}  // namespace detail

/// Parses and validates a config; every problem is a SchemaError naming the
/// offending field (or the line/column for malformed JSON).
inline ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        std::string where = "byte " + std::to_string(e.byte);
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw SchemaError("line " + std::to_string(line) + ", column " + std::to_string(col) + " (" + where + "): malformed JSON");
    }
    if (!j.is_object()) schema::fail("", "config must be a JSON object");
    const json& k = schema::require(j, "", "kind");
    if (!k.is_string()) schema::fail("kind", "expected a string");
    ExperimentConfig cfg;
    cfg.kind = k.get<std::string>();
    if (std::find(kinds().begin(), kinds().end(), cfg.kind) == kinds().end()) schema::fail("kind", "unknown kind '" + cfg.kind + "'");
    detail::parse_settings(j, cfg.settings);
    cfg.payload = detail::parse_payload(cfg.kind, j);
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw SchemaError(file.string() + ": cannot open config");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

inline json config_json(const ExperimentConfig& cfg) {
    json j;
    j["kind"] = cfg.kind;
    detail::settings_json(cfg.settings, j);
    std::visit(detail::PayloadJson{j}, cfg.payload);
    return j;
}

inline std::string serialize_config(const ExperimentConfig& cfg) { return config_json(cfg).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Orbit cache

/// 64-bit FNV-1a; stable across runs and platforms, used to key systems.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string system_key(const SystemSpec& s) {
    std::ostringstream os;
    os << std::hex << fnv1a(s.to_json().dump());
    return os.str();
}

/// Append-only JSON-lines store of orbit prefixes keyed by (system, point).
/// Readers share a lock; a single writer appends.
class OrbitCache {
public:
    OrbitCache() = default;
    explicit OrbitCache(std::filesystem::path file) : file_(std::move(file)) {
        std::ifstream in(file_);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("system") || !j.contains("orbit")) continue;
            std::vector<ProjPoint> orbit;
            const std::size_t k = j["orbit"].empty() ? 0 : j["orbit"][0].size();
            for (const auto& p : j["orbit"]) orbit.push_back(parse_point(p, "orbit", k));
            if (orbit.empty()) continue;
            store(j["system"].get<std::string>(), std::move(orbit));
        }
    }

    std::vector<ProjPoint> get(const std::string& system, const ProjPoint& p) const {
        std::shared_lock lock(mu_);
        auto it = map_.find(key(system, p));
        return it == map_.end() ? std::vector<ProjPoint>{p} : it->second;
    }

    /// Records the orbit if it extends what is stored; persisted when a file is set.
    void put(const std::string& system, const std::vector<ProjPoint>& orbit) {
        if (orbit.empty()) return;
        std::unique_lock lock(mu_);
        auto& slot = map_[key(system, orbit.front())];
        if (slot.size() >= orbit.size()) return;
        slot = orbit;
        if (file_.empty()) return;
        json pts = json::array();
        for (const auto& q : orbit) {
            json a = json::array();
            for (const auto& [x, y] : q.coords()) a.push_back(json::array({x.get_str(), y.get_str()}));
            pts.push_back(a);
        }
        std::ofstream out(file_, std::ios::app);
        out << json{{"system", system}, {"orbit", pts}}.dump() << "\n";
    }

    std::size_t size() const {
        std::shared_lock lock(mu_);
        return map_.size();
    }

private:
    static std::string key(const std::string& system, const ProjPoint& p) { return system + "|" + p.to_string(); }
    void store(const std::string& system, std::vector<ProjPoint> orbit) {
        auto& slot = map_[key(system, orbit.front())];
        if (slot.size() < orbit.size()) slot = std::move(orbit);
    }

    std::filesystem::path file_;
    mutable std::shared_mutex mu_;
    std::map<std::string, std::vector<ProjPoint>> map_;
};

// ---------------------------------------------------------------------------
// Running experiments

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitSchema = 2, kExitBudget = 3, kExitInconclusive = 4 };

struct RunResult {
    json report;
    std::string csv;
    int exit_code = kExitOk;
};

namespace detail {

inline json interval_json(const RationalInterval& r) { return json::array({rational_string(r.lo), rational_string(r.hi)}); }

inline std::string real_string(const Real& r) { return r.to_string(20); }

inline std::string csv_point(const ProjPoint& p) { return "\"" + p.to_string() + "\""; }

inline Rational width_of(const Settings& s) { return dyadic(static_cast<unsigned long>(s.width_bits)); }

inline json spectrum_json(const Spectrum& s) {
    json j;
    j["dimension"] = s.dimension;
    json cp = json::array();
    for (const auto& c : s.characteristic.coeffs()) cp.push_back(schema::integer_json(c));
    j["characteristic_polynomial"] = cp;
    std::ostringstream pretty;
    pretty << s.characteristic;
    j["characteristic_text"] = pretty.str();
    json es = json::array();
    for (const auto& e : s.entries) {
        json x;
        switch (e.kind) {
            case EigenKind::Rational:
                x["kind"] = "rational";
                x["value"] = rational_string(e.value);
                break;
            case EigenKind::RealInterval:
                x["kind"] = "real";
                x["value"] = interval_json(e.enclosure);
                break;
            case EigenKind::Complex:
                x["kind"] = "complex";
                x["imag_sign"] = e.imag_sign;
                break;
        }
        x["modulus"] = interval_json(e.modulus);
        x["approx"] = json::array({e.approx_re, e.approx_im});
        x["algebraic_multiplicity"] = e.algebraic_multiplicity;
        if (e.geometric_multiplicity) x["geometric_multiplicity"] = *e.geometric_multiplicity;
        if (e.jordan_block_sizes) x["jordan_block_sizes"] = *e.jordan_block_sizes;
        es.push_back(x);
    }
    j["entries"] = es;
    j["spectral_radius"] = interval_json(s.spectral_radius);
    return j;
}

inline RunResult run_spectrum(const SpectrumPayload& p, const Settings& st) {
    RunResult r;
    try {
        const Spectrum s = rational_spectrum(p.matrix, width_of(st));
        r.report = spectrum_json(s);
        const ModulusVerdict v = same_modulus_test(p.matrix, width_of(st));
        r.report["same_modulus"] = to_string(v);
        r.report["gershgorin_bound"] = gershgorin_bound(p.matrix).get_str();
        r.csv = "kind,value,modulus_lo,modulus_hi,approx_re,approx_im,algebraic,geometric,blocks\n";
        for (const auto& e : s.entries) {
            std::string blocks;
            if (e.jordan_block_sizes)
                for (auto b : *e.jordan_block_sizes) blocks += (blocks.empty() ? "" : " ") + std::to_string(b);
            std::ostringstream row;
            row.precision(17);
            row << (e.kind == EigenKind::Rational ? "rational" : e.kind == EigenKind::RealInterval ? "real" : "complex") << ","
                << (e.kind == EigenKind::Rational ? rational_string(e.value) : "") << "," << rational_string(e.modulus.lo) << ","
                << rational_string(e.modulus.hi) << "," << e.approx_re << "," << e.approx_im << "," << e.algebraic_multiplicity
                << "," << (e.geometric_multiplicity ? std::to_string(*e.geometric_multiplicity) : "") << "," << blocks << "\n";
            r.csv += row.str();
        }
        if (v == ModulusVerdict::Inconclusive) r.exit_code = kExitInconclusive;
    } catch (const IntervalSeparationFailure& e) {
        r.report = {{"error", e.what()}};
        r.exit_code = kExitInconclusive;
    }
    return r;
}

inline RunResult run_cone(const ConePayload& p, const Settings& st) {
    RunResult r;
    const RationalCone c = canonicalize(p.rays);
    json j;
    j["rays"] = schema::rows_json(c.rays());
    j["facets"] = schema::rows_json(c.facets());
    j["pointed"] = c.is_pointed();
    j["full_dimensional"] = c.is_full_dimensional();
    j["proper"] = c.is_proper();
    const ConeMapReport m = map_cone(p.matrix, c);
    json mj;
    mj["invariant"] = m.invariant;
    if (m.ray_permutation) mj["ray_permutation"] = *m.ray_permutation;
    else mj["ray_permutation"] = nullptr;
    json er = json::array();
    for (const auto& e : m.eigen_rays) er.push_back({{"ray", e.ray}, {"eigenvalue", rational_string(e.eigenvalue)}});
    mj["eigen_rays"] = er;
    mj["verdict"] = to_string(m.verdict);
    j["map"] = mj;
    r.csv = "ray,vector,image,eigenvalue\n";
    for (std::size_t i = 0; i < c.rays().size(); ++i) {
        std::string ev;
        for (const auto& e : m.eigen_rays)
            if (e.ray == i) ev = rational_string(e.eigenvalue);
        auto vs = [](const ZVector& v) {
            std::string s = "\"(";
            for (std::size_t t = 0; t < v.size(); ++t) s += (t ? "," : "") + v[t].get_str();
            return s + ")\"";
        };
        r.csv += std::to_string(i) + "," + vs(c.rays()[i]) + "," + vs(p.matrix * c.rays()[i]) + "," + ev + "\n";
    }
    if (c.is_proper() && m.invariant) {
        const DilationReport d = dilation_criterion(p.matrix, c, width_of(st));
        json dj{{"verdict", to_string(d.verdict)}, {"moduli", to_string(d.moduli)}, {"scalar", d.scalar}};
        if (d.witness) dj["witness"] = schema::vector_json(*d.witness);
        if (d.eigenvalue) dj["eigenvalue"] = rational_string(*d.eigenvalue);
        j["dilation"] = dj;
        if (d.verdict == DilationVerdict::Inconclusive) r.exit_code = kExitInconclusive;
    } else {
        j["dilation"] = {{"skipped", "needs a proper invariant cone"}};
    }
    const bool fixes_all = m.ray_permutation && m.eigen_rays.size() == c.rays().size() &&
                           std::all_of(m.eigen_rays.begin(), m.eigen_rays.end(), [](const EigenRay& e) { return sgn(e.eigenvalue) > 0; });
    if (fixes_all) {
        const RayCountReport rc = ray_count_criterion(p.matrix, c);
        json rj{{"s", rc.s}, {"t", rc.t}, {"q", rc.q}, {"verdict", to_string(rc.verdict)}};
        if (rc.common_eigenvalue) rj["common_eigenvalue"] = rational_string(*rc.common_eigenvalue);
        j["ray_count"] = rj;
        if (p.lambda && c.is_proper()) {
            const auto w = separates_eigenspace(p.matrix, c, *p.lambda);
            json sj{{"lambda", rational_string(*p.lambda)}, {"separates", w.has_value()}};
            if (w) sj["witness"] = json::array({schema::vector_json(w->v), schema::vector_json(w->w)});
            j["separation"] = sj;
        }
    } else {
        j["ray_count"] = {{"skipped", "matrix does not fix every ray with a positive eigenvalue"}};
    }
    r.report = j;
    return r;
}

inline RunResult run_orbit(const OrbitPayload& p, const Settings& st, OrbitCache* cache) {
    RunResult r;
    const ModelSystem f = p.system.build();
    const std::string key = system_key(p.system);
    std::vector<ProjPoint> prefix = cache ? cache->get(key, p.point) : std::vector<ProjPoint>{p.point};
    LazyOrbit orbit(f, std::move(prefix), st.digit_budget);
    orbit.at(p.n);
    const std::size_t have = std::min(orbit.computed(), p.n + 1);
    if (cache) cache->put(key, orbit.points());
    const std::size_t k = f.k();
    json j;
    j["system_hash"] = key;
    j["n_requested"] = p.n;
    j["n_computed"] = have - 1;
    j["truncated"] = orbit.truncated() && have < p.n + 1;
    j["digit_budget"] = st.digit_budget;
    const mpfr_prec_t bits = st.precision;
    json pts = json::array();
    if (st.log_heights_only) {
        r.csv = "n";
        for (std::size_t i = 1; i <= k; ++i) r.csv += ",h_" + std::to_string(i);
        r.csv += ",h\n";
        for (std::size_t n = 0; n < have; ++n) {
            const ProjPoint& q = orbit.points()[n];
            json hs = json::array();
            r.csv += std::to_string(n);
            for (std::size_t i = 0; i < k; ++i) {
                const std::string v = coordinate_height(q[i], bits).to_string(17);
                hs.push_back(v);
                r.csv += "," + v;
            }
            const std::string tot = weil_height(q, bits).value.to_string(17);
            r.csv += "," + tot + "\n";
            pts.push_back({{"n", n}, {"log_heights", hs}, {"h", tot}});
        }
        j["log_heights"] = pts;
    } else {
        r.csv = "n";
        for (std::size_t i = 1; i <= k; ++i) r.csv += ",x_" + std::to_string(i) + ",y_" + std::to_string(i);
        r.csv += "\n";
        for (std::size_t n = 0; n < have; ++n) {
            const ProjPoint& q = orbit.points()[n];
            r.csv += std::to_string(n);
            for (const auto& [x, y] : q.coords()) r.csv += "," + x.get_str() + "," + y.get_str();
            r.csv += "\n";
            json a = json::array();
            for (const auto& [x, y] : q.coords()) a.push_back(json::array({x.get_str(), y.get_str()}));
            pts.push_back(a);
        }
        j["orbit"] = pts;
    }
    r.report = j;
    return r;
}

inline json height_value_json(const HeightValue& h) {
    json j{{"value", real_string(h.value)}, {"provenance", to_string(h.provenance)}, {"n_used", h.n_used},
           {"residual", h.residual.to_double()}};
    if (h.functional_residual) j["functional_residual"] = h.functional_residual->to_double();
    j["budget_exhausted"] = h.budget_exhausted;
    return j;
}

inline std::string survey_csv_header(const std::vector<Eigenclass>& classes) {
    std::string s = "point,h";
    for (const auto& c : classes)
        if (abs(c.lambda) > 1) s += ",hhat[lambda=" + rational_string(c.lambda) + "]";
    return s + ",alpha,in_G\n";
}

inline RunResult run_heights(const HeightsPayload& p, const Settings& st, OrbitCache* cache) {
    RunResult r;
    json j;
    if (p.planted) {
        const PlantedSpec& ps = *p.planted;
        const mpfr_prec_t bits = st.precision;
        PlantedJordanBlock block(ps.lambda, ps.size, st.seed, ps.noise, ps.n + 1, bits);
        JordanOptions jo;
        jo.n = ps.n;
        jo.bits = bits;
        const JordanResult res = jordan_heights(ps.lambda, ps.size, block.evaluator(), jo);
        json pj{{"lambda", rational_string(ps.lambda)}, {"size", ps.size}, {"noise", ps.noise}, {"n", ps.n}, {"seed", st.seed}};
        json members = json::array();
        r.csv = "member,planted,recovered,error,transformation_residual\n";
        for (std::size_t k = 0; k < ps.size; ++k) {
            const Real err = abs(res.heights[k].value - block.planted()[k]);
            members.push_back({{"member", k}, {"planted", real_string(block.planted()[k])}, {"recovered", height_value_json(res.heights[k])},
                               {"error", err.to_double()}, {"transformation_residual", res.transformation_residuals[k].to_double()}});
            std::ostringstream row;
            row.precision(17);
            row << k << "," << block.planted()[k].to_string(17) << "," << res.heights[k].value.to_string(17) << "," << err.to_double()
                << "," << res.transformation_residuals[k].to_double() << "\n";
            r.csv += row.str();
        }
        pj["members"] = members;
        j["planted"] = pj;
    }
    if (p.system) {
        const ModelSystem f = p.system->build();
        const std::string key = system_key(*p.system);
        const DivisorClass h = p.h ? *p.h : DivisorClass(f.k(), 1);
        ClassifyOptions opt;
        opt.h = h;
        opt.tau = p.tau;
        opt.canonical.n_max = p.n_max;
        opt.canonical.digit_budget = st.digit_budget;
        opt.canonical.bits = st.precision;
        opt.degree.digit_budget = st.digit_budget;
        opt.degree.bits = st.precision;
        opt.degree.h = h;
        const auto classes = eigenclass_decomposition(f.pullback(), ZVector(h.begin(), h.end()));
        j["lambda1"] = interval_json(dynamical_degree(f));
        json cl = json::array();
        for (const auto& c : classes) cl.push_back({{"lambda", rational_string(c.lambda)}, {"divisor", schema::vector_json(c.divisor)}});
        j["eigenclasses"] = cl;
        std::string csv = survey_csv_header(classes);
        json pts = json::array();
        for (const auto& pt : p.points) {
            std::vector<ProjPoint> prefix = cache ? cache->get(key, pt) : std::vector<ProjPoint>{pt};
            LazyOrbit orbit(f, std::move(prefix), st.digit_budget);
            const ClassificationRecord rec = classify_point(orbit, opt, &classes);
            if (cache) cache->put(key, orbit.points());
            json pj{{"point", point_json(pt)}, {"weil_height", real_string(weil_height(pt, st.precision).value)}};
            json bh = json::array();
            csv += csv_point(pt) + "," + weil_height(pt, st.precision).value.to_string(17);
            for (const auto& b : rec.block_heights) {
                bh.push_back({{"label", b.label}, {"divisor", schema::vector_json(b.divisor)}, {"height", height_value_json(b.height)}});
                csv += "," + b.height.value.to_string(17);
            }
            pj["block_heights"] = bh;
            pj["alpha"] = rational_string(rec.alpha);
            pj["certain"] = rec.certain;
            pj["in_G"] = rec.all_blocks_zero;
            if (rec.smallest_nonzero_index) pj["smallest_nonzero_index"] = *rec.smallest_nonzero_index;
            if (rec.estimate) {
                json ej{{"n_used", rec.estimate->n_used}, {"truncated", rec.estimate->truncated}, {"agree", rec.estimate->agree}};
                if (rec.estimate->root) ej["root"] = rec.estimate->root->to_double();
                if (rec.estimate->ratio) ej["ratio"] = rec.estimate->ratio->to_double();
                pj["arithmetic_degree"] = ej;
            }
            if (rec.consistent) pj["consistent"] = *rec.consistent;
            if (!rec.certain) r.exit_code = kExitInconclusive;
            csv += "," + rational_string(rec.alpha) + "," + (rec.all_blocks_zero ? "true" : "false") + "\n";
            pts.push_back(pj);
        }
        j["points"] = pts;
        r.csv = p.planted ? r.csv + "\n" + csv : csv;
    }
    r.report = j;
    return r;
}

inline RunResult run_survey(const SurveyPayload& p, const Settings& st) {
    RunResult r;
    const ModelSystem f = p.system.build();
    const DivisorClass h = p.h ? *p.h : DivisorClass(f.k(), 1);
    SurveyOptions so;
    so.bound = p.bound;
    so.sample_size = p.sample;
    so.seed = st.seed;
    so.classify.h = h;
    so.classify.canonical.digit_budget = st.digit_budget;
    so.classify.canonical.bits = st.precision;
    const SurveyReport rep = survey_small_set(f, so);
    const auto classes = eigenclass_decomposition(f.pullback(), ZVector(h.begin(), h.end()));
    json j;
    j["lambda1"] = rational_string(rep.lambda1);
    j["counts"] = {{"G", rep.g_count}, {"B", rep.b_count}};
    j["density_ratio"] = rep.density_ratio;
    j["invariance_violations"] = rep.invariance_violations;
    j["height_bound"] = "log " + std::to_string(p.bound);
    j["space_size"] = rep.space_size;
    j["examined"] = rep.examined;
    j["sampled"] = rep.sampled;
    j["seed"] = st.seed;
    j["alpha_equals_lambda1"] = rep.alpha_top_count;
    j["alpha_equals_lambda1_fraction"] = rep.alpha_top_fraction;
    j["top_block_zero"] = rep.top_zero_count;
    j["uncertain"] = rep.uncertain;
    r.csv = survey_csv_header(classes);
    for (const auto& row : rep.rows) {
        std::ostringstream os;
        os.precision(17);
        os << csv_point(row.point) << "," << row.weil_height;
        for (double b : row.block_heights) os << "," << b;
        os << "," << rational_string(row.alpha) << "," << (row.in_g ? "true" : "false") << "\n";
        r.csv += os.str();
    }
    if (rep.uncertain) r.exit_code = kExitInconclusive;
    r.report = j;
    return r;
}

inline RunResult run_atiyah(const AtiyahPayload& p, const Settings&) {
    RunResult r;
    const Pic0Group g(p.generators);
    const AtiyahExpr e = BundleSpec::build(g, p.bundle);
    json j;
    j["bundle"] = e.format(g);
    j["rank"] = e.rank();
    j["det"] = g.format(det_bundle(e, g));
    j["h0"] = h0(e, g);
    j["model_derived"] = true;
    r.csv = "section,term,r,twist,h0\n";
    auto rows = [&](const std::string& section, const AtiyahExpr& x) {
        for (std::size_t i = 0; i < x.terms().size(); ++i) {
            const auto& t = x.terms()[i];
            r.csv += section + "," + std::to_string(i) + "," + std::to_string(t.r) + "," + g.format(t.twist) + "," +
                     (g.is_identity(t.twist) ? "1" : "0") + "\n";
        }
    };
    rows("bundle", e);
    if (p.sym) {
        const AtiyahExpr s = sym_bundle(e, *p.sym, g);
        j["sym"] = {{"d", *p.sym}, {"decomposition", s.format(g)}, {"rank", s.rank()}, {"det", g.format(det_bundle(s, g))}, {"h0", h0(s, g)}};
        rows("sym", s);
    }
    if (p.tensor) {
        const AtiyahExpr t = atiyah_tensor(p.tensor->first, p.tensor->second, g.rank());
        j["tensor"] = {{"r", p.tensor->first}, {"s", p.tensor->second}, {"decomposition", t.format(g)}, {"rank", t.rank()}};
        rows("tensor", t);
    }
    if (p.anticanonical_m) j["anticanonical"] = {{"m", *p.anticanonical_m}, {"h0", anticanonical_h0(e, *p.anticanonical_m, g)}};
    if (p.m_max) {
        const IitakaEstimate est = iitaka_estimate(e, *p.m_max, g);
        j["iitaka"] = {{"m_max", *p.m_max}, {"sequence", est.sequence}, {"verdict", to_string(est.verdict)}};
        if (est.verdict == KappaVerdict::Indeterminate) r.exit_code = kExitInconclusive;
    }
    r.report = j;
    return r;
}

inline RunResult run_good_eigenspace(const GoodEigenspacePayload& p, const Settings&) {
    RunResult r;
    GoodEigenspaceReport rep;
    KappaOracle oracle = model_kappa_oracle();
    if (p.oracle == "atiyah") {
        const Pic0Group g(p.generators);
        std::vector<AtiyahAssignment> table;
        for (const auto& a : p.assignments) table.push_back({a.divisor, BundleSpec::build(g, a.bundle)});
        oracle = atiyah_kappa_oracle(g, std::move(table), p.m_max);
    }
    if (p.system) {
        const ModelSystem f = p.system->build();
        ZVector h = p.h ? *p.h : ZVector(f.k(), Integer(1));
        std::vector<ZVector> rays;
        for (std::size_t i = 0; i < f.k(); ++i) {
            ZVector e(f.k(), Integer(0));
            e[i] = 1;
            rays.push_back(e);
        }
        rep = good_eigenspace_check(f.pullback(), h, canonicalize(rays), oracle);
    } else {
        const ZVector h = p.h ? *p.h : ZVector(p.matrix->rows(), Integer(1));
        rep = good_eigenspace_check(*p.matrix, h, canonicalize(p.cone), oracle);
    }
    json j;
    j["verdict"] = to_string(rep.verdict);
    j["lambda1"] = interval_json(rep.lambda1);
    if (rep.lambda) j["lambda"] = rational_string(*rep.lambda);
    j["v_h_basis"] = schema::rows_json(rep.v_h_basis);
    static const char* names[4] = {"unique_top_modulus", "simple_blocks", "integral_nef_eigenbasis", "some_kappa_nonzero"};
    json cs = json::array();
    r.csv = "condition,holds,evidence\n";
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& c = rep.conditions[i];
        json x{{"condition", names[i]}, {"evidence", c.evidence}};
        if (c.holds) x["holds"] = *c.holds;
        else x["holds"] = nullptr;
        cs.push_back(x);
        r.csv += std::string(names[i]) + "," + (c.holds ? (*c.holds ? "true" : "false") : "unknown") + ",\"" + c.evidence + "\"\n";
    }
    j["conditions"] = cs;
    j["eigenbasis"] = schema::rows_json(rep.eigenbasis);
    if (rep.verdict == GoodVerdict::Inconclusive) r.exit_code = kExitInconclusive;
    r.report = j;
    return r;
}

}  // namespace detail

/// Runs a validated config. Library errors propagate; the caller maps them to
/// exit codes (see exit_code_for).
inline RunResult run(const ExperimentConfig& cfg, OrbitCache* cache = nullptr) {
    const Settings& st = cfg.settings;
    RunResult r = std::visit(
        [&](const auto& p) -> RunResult {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, SpectrumPayload>) return detail::run_spectrum(p, st);
            else if constexpr (std::is_same_v<T, ConePayload>) return detail::run_cone(p, st);
            else if constexpr (std::is_same_v<T, OrbitPayload>) return detail::run_orbit(p, st, cache);
            else if constexpr (std::is_same_v<T, HeightsPayload>) return detail::run_heights(p, st, cache);
            else if constexpr (std::is_same_v<T, SurveyPayload>) return detail::run_survey(p, st);
            else if constexpr (std::is_same_v<T, AtiyahPayload>) return detail::run_atiyah(p, st);
            else return detail::run_good_eigenspace(p, st);
        },
        cfg.payload);
    json wrapped;
    wrapped["kind"] = cfg.kind;
    wrapped["seed"] = st.seed;
    wrapped["precision"] = st.precision;
    wrapped["result"] = std::move(r.report);
    r.report = std::move(wrapped);
    return r;
}

inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const SchemaError*>(&e)) return kExitSchema;
    if (dynamic_cast<const CombinatorialBudget*>(&e)) return kExitBudget;
    if (dynamic_cast<const IntervalSeparationFailure*>(&e)) return kExitInconclusive;
    return kExitError;
}

inline std::string provenance(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "workbench " << kVersion << "\n";
    os << "kind: " << cfg.kind << "\n";
    os << "seed: " << cfg.settings.seed << "\n";
    os << "precision_bits: " << cfg.settings.precision << "\n";
    os << "digit_budget: " << cfg.settings.digit_budget << "\n";
    os << "width_bits: " << cfg.settings.width_bits << "\n";
    os << "gmp: " << gmp_version << "\n";
    os << "mpfr: " << mpfr_get_version() << "\n";
    os << "config:\n" << serialize_config(cfg);
    return os.str();
}

/// Writes report.json, report.csv and provenance.txt into `dir`.
inline void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg, const RunResult& r) {
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "report.json") << r.report.dump(2) << "\n";
    std::ofstream(dir / "report.csv") << r.csv;
    std::ofstream(dir / "provenance.txt") << provenance(cfg);
}

}  // namespace dynwork::cli
