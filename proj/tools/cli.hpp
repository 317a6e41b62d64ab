#pragma once

#include <wdvv/wdvv.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace wdvv::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int { kPass = 0, kCheckFailed = 1, kInputError = 2 };

/// Any problem with the input; `pointer` is a JSON pointer into the problem file.
class InputError : public std::runtime_error {
public:
    InputError(std::string kind, std::string pointer, const std::string& message, std::optional<std::size_t> position = std::nullopt)
        : std::runtime_error(pointer.empty() ? message : pointer + ": " + message),
          kind_(std::move(kind)), pointer_(std::move(pointer)), message_(message), position_(position) {}

    const std::string& kind() const noexcept { return kind_; }
    const std::string& pointer() const noexcept { return pointer_; }
    const std::string& message() const noexcept { return message_; }
    std::optional<std::size_t> position() const noexcept { return position_; }

private:
    std::string kind_;
    std::string pointer_;
    std::string message_;
    std::optional<std::size_t> position_;
};

struct LoopSpec {
    Point corner;
    std::size_t axis_a = 0, axis_b = 1;
    double side = 0.1;
};

struct EmbeddingConfig {
    Rational c = 1;
    Point base_point;
    GridSpec grid;
    double step = 1e-3;
    std::optional<double> stencil_offset;
    double tol = 1e-6;
    std::optional<LoopSpec> loop;
    double loop_tol = 1e-7;
};

struct SimulationConfig {
    std::size_t m = 256;
    double length = 2 * std::numbers::pi;
    double amplitude = 0.01;
    std::vector<double> phases;
    double dt = 0.002;
    double t_end = 0.1;
    std::size_t flow = 2;  // one-based structural flow
    std::size_t record_every = 5;
    std::vector<Poly> densities;
    std::size_t hierarchy_depth = 2;
    double tol = 1e-4;
};

struct Problem {
    std::string kind;
    std::string name;
    std::size_t n = 0;
    std::optional<Potential> potential;
    std::optional<PsiSystem> psi;
    std::optional<FlatHamOp> hamop;
    std::optional<EmbeddingConfig> embedding;
    std::optional<SimulationConfig> simulation;
};

namespace detail {

class Reader {
public:
    explicit Reader(const json& root) : root_(root) {}

    const json& at(const std::string& ptr) const {
        const json* j = find(ptr);
        if (!j) throw InputError("schema", ptr, "missing required field");
        return *j;
    }
    const json* find(const std::string& ptr) const {
        json::json_pointer p(ptr);
        return root_.contains(p) ? &root_.at(p) : nullptr;
    }

    void allow_only(const std::string& ptr, const std::set<std::string>& keys) const {
        const json& obj = ptr.empty() ? root_ : at(ptr);
        if (!obj.is_object()) throw InputError("schema", ptr, "expected an object");
        for (const auto& [k, v] : obj.items())
            if (!keys.count(k)) throw InputError("schema", ptr + "/" + k, "unknown field");
    }

    std::size_t count(const std::string& ptr, std::size_t min) const {
        const json& j = at(ptr);
        if (!j.is_number_integer() || j.get<long long>() < static_cast<long long>(min))
            throw InputError("schema", ptr, "expected an integer >= " + std::to_string(min));
        return j.get<std::size_t>();
    }

    double number(const std::string& ptr) const {
        const json& j = at(ptr);
        if (!j.is_number()) throw InputError("schema", ptr, "expected a number");
        double v = j.get<double>();
        if (!std::isfinite(v)) throw InputError("schema", ptr, "expected a finite number");
        return v;
    }
    double positive(const std::string& ptr) const {
        double v = number(ptr);
        if (!(v > 0.0)) throw InputError("schema", ptr, "expected a positive number");
        return v;
    }
    double number_or(const std::string& ptr, double fallback) const { return find(ptr) ? number(ptr) : fallback; }
    double positive_or(const std::string& ptr, double fallback) const { return find(ptr) ? positive(ptr) : fallback; }

    std::string string(const std::string& ptr) const {
        const json& j = at(ptr);
        if (!j.is_string()) throw InputError("schema", ptr, "expected a string");
        return j.get<std::string>();
    }

    Rational rational(const std::string& ptr) const {
        const json& j = at(ptr);
        if (j.is_number_integer()) return Rational(j.get<long>());
        if (j.is_string()) {
            try {
                return parse_rational(j.get<std::string>());
            } catch (const std::invalid_argument& e) {
                throw InputError("schema", ptr, e.what());
            }
        }
        throw InputError("schema", ptr, "expected an integer or a rational string such as \"1/2\"");
    }

    RationalMatrix matrix(const std::string& ptr, std::size_t n) const {
        const json& j = at(ptr);
        if (!j.is_array() || j.size() != n) throw InputError("schema", ptr, "expected " + std::to_string(n) + " rows");
        RationalMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::string row = ptr + "/" + std::to_string(i);
            if (!j[i].is_array() || j[i].size() != n) throw InputError("schema", row, "expected " + std::to_string(n) + " entries");
            for (std::size_t k = 0; k < n; ++k) m(i, k) = rational(row + "/" + std::to_string(k));
        }
        return m;
    }

    ConstSymMatrix metric(const std::string& ptr, std::size_t n) const {
        RationalMatrix m = matrix(ptr, n);
        const std::string what = ptr.substr(1);
        try {
            return ConstSymMatrix(std::move(m), what);
        } catch (const SingularMatrixError& e) {
            throw InputError("singular", ptr, e.what());
        } catch (const std::invalid_argument& e) {
            throw InputError("schema", ptr, e.what());
        }
    }

    Poly expression(const std::string& ptr, std::size_t n) const {
        std::string text = string(ptr);
        try {
            return parse_polynomial(text, n);
        } catch (const ParseError& e) {
            throw InputError("parse", ptr, e.what(), e.position());
        }
    }

    std::vector<Poly> expressions(const std::string& ptr, std::size_t n, std::size_t expected) const {
        const json& j = at(ptr);
        if (!j.is_array() || (expected && j.size() != expected))
            throw InputError("schema", ptr, expected ? "expected " + std::to_string(expected) + " expressions" : "expected an array");
        std::vector<Poly> out;
        for (std::size_t i = 0; i < j.size(); ++i) out.push_back(expression(ptr + "/" + std::to_string(i), n));
        return out;
    }

    Point point(const std::string& ptr, std::size_t n) const {
        const json& j = at(ptr);
        if (!j.is_array() || j.size() != n) throw InputError("schema", ptr, "expected " + std::to_string(n) + " coordinates");
        Point p(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) p[static_cast<Eigen::Index>(i)] = number(ptr + "/" + std::to_string(i));
        return p;
    }

private:
    const json& root_;
};

inline const std::set<std::string> kPotentialKeys{"kind", "name", "n", "eta", "phi"};
inline const std::set<std::string> kPsiKeys{"kind", "name", "n", "l", "eta", "mu", "psi"};

inline Potential read_potential(const Reader& r, std::size_t n) { return Potential(r.metric("/eta", n), r.expression("/phi", n)); }

inline PsiSystem read_psi(const Reader& r, std::size_t n) {
    std::size_t l = r.count("/l", 1);
    return PsiSystem(r.metric("/eta", n), r.metric("/mu", l), r.expressions("/psi", n, l));
}

inline EmbeddingConfig read_embedding(const Reader& r, std::size_t n) {
    EmbeddingConfig e;
    if (r.find("/c")) e.c = r.rational("/c");
    if (e.c == 0) throw InputError("schema", "/c", "deformation parameter must be nonzero");
    e.base_point = r.find("/base_point") ? r.point("/base_point", n) : Point::Zero(static_cast<Eigen::Index>(n));
    r.allow_only("/grid", {"center", "spacing", "counts"});
    e.grid.center = r.find("/grid/center") ? r.point("/grid/center", n) : e.base_point;
    e.grid.spacing = r.positive("/grid/spacing");
    const json& counts = r.at("/grid/counts");
    if (!counts.is_array() || counts.size() != n) throw InputError("schema", "/grid/counts", "expected " + std::to_string(n) + " counts");
    for (std::size_t i = 0; i < n; ++i) e.grid.counts.push_back(r.count("/grid/counts/" + std::to_string(i), 1));
    e.step = r.positive_or("/step", e.step);
    if (r.find("/stencil_offset")) e.stencil_offset = r.positive("/stencil_offset");
    e.tol = r.positive_or("/tol", e.tol);
    if (r.find("/loop")) {
        r.allow_only("/loop", {"corner", "axes", "side"});
        LoopSpec loop;
        loop.corner = r.point("/loop/corner", n);
        const json& axes = r.at("/loop/axes");
        if (!axes.is_array() || axes.size() != 2) throw InputError("schema", "/loop/axes", "expected two one-based axes");
        loop.axis_a = r.count("/loop/axes/0", 1) - 1;
        loop.axis_b = r.count("/loop/axes/1", 1) - 1;
        if (loop.axis_a >= n || loop.axis_b >= n || loop.axis_a == loop.axis_b)
            throw InputError("schema", "/loop/axes", "axes must be distinct and at most " + std::to_string(n));
        loop.side = r.positive("/loop/side");
        e.loop = loop;
    }
    e.loop_tol = r.positive_or("/loop_tol", e.loop_tol);
    return e;
}

inline SimulationConfig read_simulation(const Reader& r, std::size_t n, std::size_t l) {
    SimulationConfig s;
    r.allow_only("/grid", {"m", "length"});
    s.m = r.count("/grid/m", 16);
    s.length = r.positive_or("/grid/length", s.length);
    r.allow_only("/initial", {"amplitude", "phases"});
    s.amplitude = r.number("/initial/amplitude");
    const json& phases = r.at("/initial/phases");
    if (!phases.is_array() || phases.size() != n) throw InputError("schema", "/initial/phases", "expected " + std::to_string(n) + " phases");
    for (std::size_t i = 0; i < n; ++i) s.phases.push_back(r.number("/initial/phases/" + std::to_string(i)));
    s.dt = r.positive_or("/dt", s.dt);
    s.t_end = r.positive_or("/t_end", s.t_end);
    if (r.find("/flow")) s.flow = r.count("/flow", 1);
    if (s.flow > l) throw InputError("schema", "/flow", "flow index exceeds the number of psi functions");
    if (r.find("/record_every")) s.record_every = r.count("/record_every", 1);
    if (r.find("/densities")) s.densities = r.expressions("/densities", n, 0);
    if (r.find("/hierarchy_depth")) s.hierarchy_depth = r.count("/hierarchy_depth", 1);
    s.tol = r.positive_or("/tol", s.tol);
    return s;
}

}  // namespace detail

/// Parses and fully validates a problem document.
inline Problem parse_problem(const json& root, const std::string& fallback_name = "problem") {
    detail::Reader r(root);
    if (!root.is_object()) throw InputError("schema", "", "problem file must hold a JSON object");
    Problem p;
    p.kind = r.string("/kind");
    p.name = r.find("/name") ? r.string("/name") : fallback_name;
    p.n = r.count("/n", 1);
    const std::size_t n = p.n;
    using detail::kPotentialKeys;
    using detail::kPsiKeys;
    auto with = [](std::set<std::string> base, std::initializer_list<std::string> extra) {
        base.insert(extra);
        return base;
    };
    if (p.kind == "potential") {
        r.allow_only("", kPotentialKeys);
        p.potential = detail::read_potential(r, n);
    } else if (p.kind == "psi_system") {
        r.allow_only("", kPsiKeys);
        p.psi = detail::read_psi(r, n);
    } else if (p.kind == "hamop") {
        r.allow_only("", {"kind", "name", "n", "l", "eta_upper", "mu_upper", "affinors"});
        std::size_t l = r.count("/l", 1);
        FlatHamOp h{r.metric("/eta_upper", n), r.metric("/mu_upper", l), {}};
        const json& w = r.at("/affinors");
        if (!w.is_array() || w.size() != l) throw InputError("schema", "/affinors", "expected " + std::to_string(l) + " affinor matrices");
        for (std::size_t a = 0; a < l; ++a) {
            const std::string ptr = "/affinors/" + std::to_string(a);
            if (!w[a].is_array() || w[a].size() != n) throw InputError("schema", ptr, "expected " + std::to_string(n) + " rows");
            PolyMatrix m(n, n, n);
            for (std::size_t i = 0; i < n; ++i) {
                auto row = r.expressions(ptr + "/" + std::to_string(i), n, n);
                for (std::size_t k = 0; k < n; ++k) m(i, k) = std::move(row[k]);
            }
            h.affinors.push_back(std::move(m));
        }
        p.hamop = std::move(h);
    } else if (p.kind == "embedding") {
        r.allow_only("", with(kPotentialKeys, {"c", "base_point", "grid", "step", "stencil_offset", "tol", "loop", "loop_tol"}));
        p.potential = detail::read_potential(r, n);
        p.embedding = detail::read_embedding(r, n);
    } else if (p.kind == "simulation") {
        r.allow_only("", with(kPsiKeys, {"grid", "initial", "dt", "t_end", "flow", "record_every", "densities", "hierarchy_depth", "tol"}));
        p.psi = detail::read_psi(r, n);
        p.simulation = detail::read_simulation(r, n, p.psi->l());
    } else {
        throw InputError("schema", "/kind", "unknown kind '" + p.kind + "' (expected potential, psi_system, hamop, embedding or simulation)");
    }
    return p;
}

inline Problem load_problem(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("io", "", "cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    json root;
    try {
        root = json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw InputError("json", "", e.what(), e.byte);
    }
    return parse_problem(root, std::filesystem::path(path).stem().string());
}

inline json rational_matrix_json(const RationalMatrix& m) {
    json out = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t k = 0; k < m.cols(); ++k) {
            if (is_integer(m(i, k)))
                row.push_back(m(i, k).get_num().get_si());
            else
                row.push_back(to_string(m(i, k)));
        }
        out.push_back(row);
    }
    return out;
}

/// Problem document for a psi-system (the inverse of parse_problem for that kind).
inline json psi_system_json(const PsiSystem& s, const std::string& name) {
    json j;
    j["kind"] = "psi_system";
    j["name"] = name;
    j["n"] = s.n();
    j["l"] = s.l();
    j["eta"] = rational_matrix_json(s.eta().matrix());
    j["mu"] = rational_matrix_json(s.mu().matrix());
    j["psi"] = json::array();
    for (const auto& p : s.psi()) j["psi"].push_back(format_polynomial(p));
    return j;
}

/// Summary of a residual tensor: counts always, canonical entries (one-based
/// indices) when the total term count is at most `cap`.
inline json residual_json(const PolyTensor& t, std::size_t cap, const std::vector<std::string>& names = {}) {
    json j;
    j["shape"] = t.shape();
    j["nonzero"] = count_nonzero(t);
    j["max_total_degree"] = max_total_degree(t);
    j["terms"] = total_terms(t);
    if (total_terms(t) <= cap) {
        json entries = json::array();
        std::size_t pos = 0;
        for (const auto& p : t) {
            if (!p.is_zero()) {
                std::vector<std::size_t> idx = t.index_of(pos);
                for (auto& i : idx) ++i;
                entries.push_back({{"index", idx}, {"value", names.empty() ? format_polynomial(p) : format_polynomial(p, names)}});
            }
            ++pos;
        }
        j["entries"] = std::move(entries);
    } else {
        j["entries_omitted"] = true;
    }
    return j;
}

inline json matrix_json(const PolyMatrix& m) {
    json out = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t k = 0; k < m.cols(); ++k) row.push_back(format_polynomial(m(i, k)));
        out.push_back(row);
    }
    return out;
}

struct Options {
    std::string command;
    std::string problem_path;
    std::optional<std::string> out_path;
    std::optional<std::string> csv_path;
    bool timings = false;
    std::size_t max_terms = 200;
    std::size_t depth = 3;
    std::optional<std::string> h;
    std::optional<std::string> c;
    std::optional<std::string> lambda;
    std::optional<std::string> rho;
    std::optional<std::string> counts;
    std::optional<double> spacing;
    std::optional<double> step;
    std::optional<double> stencil;
    std::optional<double> tol;
    std::optional<std::size_t> flow;
    std::optional<double> t_end;
    std::optional<std::size_t> m;
    std::optional<double> dt;
};

struct Outcome {
    json report;
    int code = kPass;
    std::optional<json> document;  // emitted instead of the report (reduce)
};

namespace detail {

class ReportBuilder {
public:
    ReportBuilder(const Options& o, const Problem& p) : cap_(o.max_terms) {
        report_["schema_version"] = "1";
        report_["command"] = o.command;
        report_["problem"] = {{"name", p.name}, {"kind", p.kind}, {"n", p.n}};
        report_["pass"] = true;
        report_["checks"] = json::array();
    }

    void check(const std::string& name, bool pass, json extra = json::object()) {
        json c;
        c["name"] = name;
        c["pass"] = pass;
        for (auto& [k, v] : extra.items()) c[k] = v;
        report_["checks"].push_back(std::move(c));
        if (!pass) report_["pass"] = false;
    }
    void residual_check(const std::string& name, const PolyTensor& t, const std::vector<std::string>& names = {}) {
        check(name, all_zero(t), {{"residual", residual_json(t, cap_, names)}});
    }

    json& data() { return report_; }
    std::size_t cap() const { return cap_; }

    Outcome finish() {
        Outcome o;
        o.code = report_["pass"].get<bool>() ? kPass : kCheckFailed;
        o.report = std::move(report_);
        return o;
    }

private:
    json report_;
    std::size_t cap_;
};

inline Rational flag_rational(const std::string& flag, const std::string& text) {
    try {
        return parse_rational(text);
    } catch (const std::invalid_argument& e) {
        throw InputError("usage", "", "--" + flag + ": " + e.what());
    }
}

inline void require_kind(const Problem& p, std::initializer_list<const char*> kinds, const std::string& command) {
    for (const char* k : kinds)
        if (p.kind == k) return;
    std::string list;
    for (const char* k : kinds) list += (list.empty() ? "" : ", ") + std::string(k);
    throw InputError("incompatible", "/kind", "command '" + command + "' needs a problem of kind " + list + ", got " + p.kind);
}

inline FlatHamOp hamop_of(const Problem& p) { return p.hamop ? *p.hamop : affinors_from_psi(*p.psi); }

inline void relations_json(ReportBuilder& rb, const RelationsReport& rep) {
    for (const auto& r : rep.relations) rb.residual_check("relation " + r.name, r.residual);
}

inline void write_csv(const Options& o, const std::function<void(std::ostream&)>& write) {
    if (!o.csv_path) return;
    std::ofstream f(*o.csv_path, std::ios::binary);
    if (!f) throw InputError("io", "", "cannot write " + *o.csv_path);
    write(f);
}

inline Outcome run_verify_wdvv(const Options& o, const Problem& p) {
    require_kind(p, {"potential", "embedding"}, o.command);
    ReportBuilder rb(o, p);
    rb.residual_check("wdvv", wdvv_residual(*p.potential));
    return rb.finish();
}

inline Outcome run_verify_frobenius(const Options& o, const Problem& p) {
    require_kind(p, {"potential", "embedding"}, o.command);
    ReportBuilder rb(o, p);
    FrobeniusReport f = verify_frobenius_conditions(*p.potential);
    rb.check("invariance", f.invariance);
    rb.check("commutativity", f.commutativity);
    rb.check("potentiality", f.potentiality);
    rb.residual_check("associativity", f.wdvv);
    auto unit = find_unit(*p.potential);
    json u = nullptr;
    if (unit) {
        u = json::array();
        for (const auto& q : *unit) u.push_back(to_string(q));
    }
    rb.data()["unit"] = u;
    return rb.finish();
}

inline Outcome run_verify_submanifold(const Options& o, const Problem& p) {
    require_kind(p, {"psi_system", "simulation"}, o.command);
    ReportBuilder rb(o, p);
    rb.residual_check("gauss", gauss_residual(*p.psi));
    rb.residual_check("ricci", ricci_residual(*p.psi));
    rb.check("codazzi", codazzi_check(*p.psi));
    return rb.finish();
}

inline Outcome run_verify_hamop(const Options& o, const Problem& p, bool pencil) {
    require_kind(p, {"hamop", "psi_system", "simulation"}, o.command);
    ReportBuilder rb(o, p);
    FlatHamOp h = hamop_of(p);
    relations_json(rb, pencil ? pencil_check(h) : check_relations(h));
    return rb.finish();
}

inline Outcome run_verify_lax(const Options& o, const Problem& p) {
    require_kind(p, {"psi_system", "simulation"}, o.command);
    LaxParams params;
    if (o.lambda) params.lambda = flag_rational("lambda", *o.lambda);
    if (o.rho) params.rho = flag_rational("rho", *o.rho);
    ReportBuilder rb(o, p);
    LaxCurvature k = zero_curvature_residual(*p.psi, params);
    const std::size_t n = p.psi->n();
    const std::size_t d = n + p.psi->l();
    PolyTensor t = zero_poly_tensor({n, n, d, d}, n + 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = 0; b < d; ++b) t(i, j, a, b) = k.at(i, j)(a, b);
    std::vector<std::string> names = default_variable_names(n);
    names.push_back("lambda");
    names.push_back("rho");
    rb.residual_check("zero_curvature", t, names);
    return rb.finish();
}

inline Outcome run_reduce(const Options& o, const Problem& p) {
    require_kind(p, {"potential"}, o.command);
    Rational c = o.c ? flag_rational("c", *o.c) : Rational(1);
    if (c == 0) throw InputError("usage", "", "--c must be nonzero");
    PsiSystem s = reduce_potential(*p.potential, c);
    std::string suffix = c == 1 ? "reduced" : "reduced-c" + to_string(c);
    for (auto& ch : suffix)
        if (ch == '/') ch = '_';
    Outcome out;
    out.document = psi_system_json(s, p.name + "-" + suffix);
    out.code = kPass;
    return out;
}

inline Outcome run_hierarchy(const Options& o, const Problem& p) {
    require_kind(p, {"psi_system", "simulation"}, o.command);
    if (o.depth == 0) throw InputError("usage", "", "--depth must be at least 1");
    ReportBuilder rb(o, p);
    rb.data()["depth"] = o.depth;
    std::vector<HierarchyLevel> levels;
    try {
        levels = build_hierarchy(*p.psi, o.depth);
        rb.check("gauss_ricci", true);
    } catch (const NotASolutionError& e) {
        rb.check("gauss_ricci", false, {{"message", e.what()}});
        return rb.finish();
    }
    json lv = json::array();
    for (const auto& l : levels) {
        json f = json::array();
        for (const auto& q : l.f_lift) f.push_back(format_polynomial(q));
        lv.push_back({{"s", l.s}, {"h", format_polynomial(l.h)}, {"F", f}, {"flow", matrix_json(l.flow.a)}, {"h_next", format_polynomial(l.h_next)}});
    }
    rb.data()["levels"] = lv;
    for (std::size_t s = 0; s + 1 < levels.size(); ++s)
        rb.residual_check("flows " + std::to_string(s + 1) + "," + std::to_string(s + 2) + " commute",
                          flows_commute_residual(levels[s].flow, levels[s + 1].flow), jet_variable_names(p.n));
    return rb.finish();
}

inline Outcome run_verify_locality(const Options& o, const Problem& p) {
    require_kind(p, {"psi_system", "simulation"}, o.command);
    if (!o.h) throw InputError("usage", "", "--h <expression> is required");
    Poly h = [&] {
        try {
            return parse_polynomial(*o.h, p.n);
        } catch (const ParseError& e) {
            throw InputError("parse", "", "--h: " + std::string(e.what()), e.position());
        }
    }();
    ReportBuilder rb(o, p);
    rb.data()["h"] = format_polynomial(h);
    try {
        LocalityReport rep = check_locality(*p.psi, h);
        rb.residual_check("locality", rep.residual);
        if (rep.passes) {
            json pd = json::array();
            for (const auto& q : *rep.p_densities) pd.push_back(format_polynomial(q));
            rb.data()["P"] = pd;
            rb.data()["f"] = format_polynomial(*rep.f_density);
        }
    } catch (const NotClosedError& e) {
        rb.check("second_density_integrable", false, {{"message", e.what()}});
    }
    return rb.finish();
}

inline Outcome run_verify_involution(const Options& o, const Problem& p) {
    require_kind(p, {"psi_system", "potential", "simulation", "embedding"}, o.command);
    ReportBuilder rb(o, p);
    if (p.psi) {
        for (std::size_t a = 0; a < p.psi->l(); ++a)
            for (std::size_t b = a + 1; b < p.psi->l(); ++b)
                rb.residual_check("involution " + std::to_string(a + 1) + "," + std::to_string(b + 1),
                                  involution_residual_constant_bracket(*p.psi, a, b));
    } else {
        rb.residual_check("wdvv_integrals", involution_wdvv_integrals(*p.potential));
    }
    return rb.finish();
}

inline Outcome run_verify_eq10(const Options& o, const Problem& p) {
    require_kind(p, {"potential", "embedding"}, o.command);
    ReportBuilder rb(o, p);
    rb.residual_check("eq10", check_eq10(*p.potential));
    rb.residual_check("functional_involution", functional_involution_residual(*p.potential));
    return rb.finish();
}

inline EmbeddingConfig embedding_with_flags(const Options& o, const Problem& p) {
    EmbeddingConfig e = *p.embedding;
    if (o.c) {
        e.c = flag_rational("c", *o.c);
        if (e.c == 0) throw InputError("usage", "", "--c must be nonzero");
    }
    if (o.counts) {
        e.grid.counts.clear();
        std::stringstream ss(*o.counts);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t used = 0;
                unsigned long v = std::stoul(item, &used);
                if (used != item.size() || v == 0) throw std::invalid_argument(item);
                e.grid.counts.push_back(v);
            } catch (const std::exception&) {
                throw InputError("usage", "", "--grid expects comma-separated positive counts");
            }
        }
        if (e.grid.counts.size() != p.n) throw InputError("usage", "", "--grid needs " + std::to_string(p.n) + " counts");
    }
    if (o.spacing) e.grid.spacing = *o.spacing;
    if (o.step) e.step = *o.step;
    if (o.stencil) e.stencil_offset = *o.stencil > 0 ? std::optional<double>(*o.stencil) : std::nullopt;
    if (o.tol) e.tol = *o.tol;
    if (!(e.grid.spacing > 0) || !(e.step > 0) || !(e.tol > 0)) throw InputError("usage", "", "spacing, step and tolerance must be positive");
    return e;
}

inline json signature_json(const Inertia& i) { return {{"positive", i.positive}, {"negative", i.negative}}; }

inline Outcome run_realize(const Options& o, const Problem& p) {
    require_kind(p, {"embedding"}, o.command);
    EmbeddingConfig cfg = embedding_with_flags(o, p);
    EmbeddingProblem e = default_initial_frame(*p.potential, cfg.c, cfg.base_point);
    ReportBuilder rb(o, p);
    rb.data()["c"] = to_string(cfg.c);
    rb.data()["ambient_signature"] = signature_json(e.metric().signature());
    rb.data()["grid"] = {{"counts", cfg.grid.counts}, {"spacing", cfg.grid.spacing}, {"step", cfg.step},
                         {"stencil_offset", cfg.stencil_offset ? json(*cfg.stencil_offset) : json(nullptr)}};
    rb.data()["tol"] = cfg.tol;
    try {
        EmbeddingSample s = sample_grid(e, cfg.grid, cfg.step, cfg.stencil_offset);
        FormsReport f = verify_fundamental_forms(e, s, cfg.tol);
        auto count = [&](char c) {
            return static_cast<std::size_t>(std::count_if(f.violations.begin(), f.violations.end(), [c](const FormViolation& v) { return v.check == c; }));
        };
        rb.check("gram_tangent", count('a') == 0, {{"max_residual", f.max_a}, {"violations", count('a')}});
        rb.check("gram_mixed", count('b') == 0, {{"max_residual", f.max_b}, {"violations", count('b')}});
        rb.check("gram_normal", count('c') == 0, {{"max_residual", f.max_c}, {"violations", count('c')}});
        rb.check("second_form", count('d') == 0, {{"max_residual", f.max_d}, {"violations", count('d')}});
        write_csv(o, [&](std::ostream& os) { write_sample_csv(os, s); });
    } catch (const NonFiniteError& err) {
        rb.check("finite", false, {{"message", err.what()}});
    }
    return rb.finish();
}

inline Outcome run_loop_test(const Options& o, const Problem& p) {
    require_kind(p, {"embedding"}, o.command);
    EmbeddingConfig cfg = embedding_with_flags(o, p);
    if (!cfg.loop) throw InputError("schema", "/loop", "loop-test needs a loop");
    double tol = o.tol ? *o.tol : cfg.loop_tol;
    EmbeddingProblem e = default_initial_frame(*p.potential, cfg.c, cfg.base_point);
    ReportBuilder rb(o, p);
    rb.data()["c"] = to_string(cfg.c);
    rb.data()["loop"] = {{"axes", {cfg.loop->axis_a + 1, cfg.loop->axis_b + 1}}, {"side", cfg.loop->side}, {"step", cfg.step}};
    try {
        double dev = loop_closure_test(e, square_loop(cfg.loop->corner, cfg.loop->axis_a, cfg.loop->axis_b, cfg.loop->side), cfg.step);
        rb.check("loop_closure", dev <= tol, {{"deviation", dev}, {"tol", tol}});
    } catch (const NonFiniteError& err) {
        rb.check("finite", false, {{"message", err.what()}});
    }
    return rb.finish();
}

inline Outcome run_simulate(const Options& o, const Problem& p) {
    require_kind(p, {"simulation"}, o.command);
    SimulationConfig s = *p.simulation;
    if (o.flow) s.flow = *o.flow;
    if (o.t_end) s.t_end = *o.t_end;
    if (o.m) s.m = *o.m;
    if (o.dt) s.dt = *o.dt;
    if (o.tol) s.tol = *o.tol;
    if (s.flow == 0 || s.flow > p.psi->l()) throw InputError("usage", "", "--flow must lie in 1.." + std::to_string(p.psi->l()));
    if (s.m < 16) throw InputError("usage", "", "--m must be at least 16");
    if (!(s.dt > 0) || !(s.t_end > 0)) throw InputError("usage", "", "--dt and --t-end must be positive");

    ReportBuilder rb(o, p);
    std::vector<Poly> densities = s.densities;
    std::vector<std::string> labels;
    for (std::size_t k = 0; k < densities.size(); ++k) labels.push_back("density " + std::to_string(k + 1));
    if (densities.empty()) {
        try {
            for (const auto& lv : build_hierarchy(*p.psi, s.hierarchy_depth)) {
                densities.push_back(lv.h);
                labels.push_back("H" + std::to_string(lv.s));
            }
        } catch (const NotASolutionError& e) {
            rb.check("gauss_ricci", false, {{"message", e.what()}});
            return rb.finish();
        }
    }
    Grid1D grid(s.m, s.length);
    HydroFlow flow = structural_flows(affinors_from_psi(*p.psi))[s.flow - 1];
    FieldState init = sine_state(grid, s.phases, s.amplitude);
    rb.data()["flow"] = s.flow;
    rb.data()["grid"] = {{"m", s.m}, {"length", s.length}};
    rb.data()["dt"] = s.dt;
    rb.data()["t_end"] = s.t_end;
    rb.data()["cfl_limit"] = cfl_limit(flow, init, grid);
    rb.data()["tol"] = s.tol;
    try {
        auto traj = simulate_flow(flow, init, grid, {s.dt, s.t_end, s.record_every});
        rb.check("no_blowup", true);
        std::vector<double> drift = conservation_report(traj, densities, grid);
        for (std::size_t k = 0; k < densities.size(); ++k)
            rb.check("conservation " + labels[k], drift[k] <= s.tol,
                     {{"density", format_polynomial(densities[k])}, {"initial", functional_value(densities[k], init, grid)}, {"drift", drift[k]}});
        write_csv(o, [&](std::ostream& os) { write_trajectory_csv(os, traj); });
    } catch (const BlowUpError& e) {
        rb.check("no_blowup", false, {{"time", e.time()}});
    }
    return rb.finish();
}

}  // namespace detail

/// Dispatches a parsed command on a loaded problem.
inline Outcome execute(const Options& o, const Problem& p) {
    using namespace detail;
    static const std::map<std::string, std::function<Outcome(const Options&, const Problem&)>> table{
        {"verify wdvv", run_verify_wdvv},
        {"verify frobenius", run_verify_frobenius},
        {"verify submanifold", run_verify_submanifold},
        {"verify hamop", [](const Options& op, const Problem& pr) { return run_verify_hamop(op, pr, false); }},
        {"verify pencil", [](const Options& op, const Problem& pr) { return run_verify_hamop(op, pr, true); }},
        {"verify lax", run_verify_lax},
        {"verify locality", run_verify_locality},
        {"verify involution", run_verify_involution},
        {"verify eq10", run_verify_eq10},
        {"reduce", run_reduce},
        {"hierarchy", run_hierarchy},
        {"realize", run_realize},
        {"loop-test", run_loop_test},
        {"simulate", run_simulate},
    };
    auto it = table.find(o.command);
    if (it == table.end()) throw InputError("usage", "", "unknown command '" + o.command + "'");
    return it->second(o, p);
}

inline json error_json(const std::string& command, const InputError& e) {
    json j;
    j["schema_version"] = "1";
    j["command"] = command;
    j["error"] = {{"kind", e.kind()}, {"pointer", e.pointer()}, {"message", e.message()}};
    if (e.position()) j["error"]["position"] = *e.position();
    return j;
}

inline void emit(const json& j, const Options& o, std::ostream& out) {
    const std::string text = j.dump(2) + "\n";
    if (o.out_path) {
        std::ofstream f(*o.out_path, std::ios::binary);
        if (!f) throw InputError("io", "", "cannot write " + *o.out_path);
        f << text;
    } else {
        out << text;
    }
}

/// Full command line (without the program name). Returns the exit code.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Exact and numeric checks for WDVV potentials, flat submanifolds and hydrodynamic hierarchies", "wdvvtk"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub, const std::string& command) {
        sub->add_option("problem", o.problem_path, "problem JSON file")->required();
        sub->add_option("--out", o.out_path, "write the report (or problem document) here");
        sub->add_option("--csv", o.csv_path, "write sampled data as CSV");
        sub->add_flag("--timings", o.timings, "add wall-clock timings to the report");
        sub->add_option("--max-terms", o.max_terms, "largest residual (in terms) printed in full");
        sub->callback([&o, command] { o.command = command; });
        return sub;
    };

    CLI::App* verify = app.add_subcommand("verify", "exact identity checks");
    verify->require_subcommand(1);
    common(verify->add_subcommand("wdvv", "associativity equations"), "verify wdvv");
    common(verify->add_subcommand("frobenius", "Frobenius algebra conditions and unit"), "verify frobenius");
    common(verify->add_subcommand("submanifold", "Gauss and Ricci equations"), "verify submanifold");
    common(verify->add_subcommand("hamop", "Hamiltonian relations of the nonlocal operator"), "verify hamop");
    common(verify->add_subcommand("pencil", "Hamiltonian relations with both sides of the curvature relation"), "verify pencil");
    CLI::App* lax = common(verify->add_subcommand("lax", "zero curvature of the linear problem"), "verify lax");
    lax->add_option("--lambda", o.lambda, "fix lambda to a rational");
    lax->add_option("--rho", o.rho, "fix rho to a rational");
    CLI::App* loc = common(verify->add_subcommand("locality", "locality of the second bracket for a density"), "verify locality");
    loc->set_help_flag("--help", "print this help message and exit");
    loc->add_option("--h", o.h, "Hamiltonian density")->required();
    common(verify->add_subcommand("involution", "involution of the psi integrals (or WDVV integrals)"), "verify involution");
    common(verify->add_subcommand("eq10", "potential functional identities"), "verify eq10");

    CLI::App* reduce = common(app.add_subcommand("reduce", "potential to psi-system with mu = eta / c"), "reduce");
    reduce->add_option("--c", o.c, "deformation parameter (rational, default 1)");
    CLI::App* hier = common(app.add_subcommand("hierarchy", "recursion h_s -> F -> h_{s+1} and local flows"), "hierarchy");
    hier->add_option("--depth", o.depth, "number of levels");
    CLI::App* realize = common(app.add_subcommand("realize", "numeric realization on a grid"), "realize");
    realize->add_option("--c", o.c, "deformation parameter (rational)");
    realize->add_option("--grid", o.counts, "points per axis, comma separated");
    realize->add_option("--spacing", o.spacing, "grid spacing");
    realize->add_option("--step", o.step, "RK4 step length in u");
    realize->add_option("--stencil", o.stencil, "stencil offset for second derivatives (0: grid neighbours)");
    realize->add_option("--tol", o.tol, "tolerance for every check");
    CLI::App* loop = common(app.add_subcommand("loop-test", "frame holonomy around a square loop"), "loop-test");
    loop->add_option("--c", o.c, "deformation parameter (rational)");
    loop->add_option("--step", o.step, "RK4 step length in u");
    loop->add_option("--tol", o.tol, "largest acceptable deviation");
    CLI::App* sim = common(app.add_subcommand("simulate", "finite-difference run of a structural flow"), "simulate");
    sim->add_option("--flow", o.flow, "one-based structural flow");
    sim->add_option("--t-end", o.t_end, "final time");
    sim->add_option("--m", o.m, "grid points");
    sim->add_option("--dt", o.dt, "time step");
    sim->add_option("--tol", o.tol, "largest acceptable drift");

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kPass;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kPass;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    }

    const auto start = std::chrono::steady_clock::now();
    try {
        Problem p = load_problem(o.problem_path);
        Outcome r = execute(o, p);
        if (o.timings && !r.document) {
            const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            r.report["timings"] = {{"total_ms", ms}};
        }
        emit(r.document ? *r.document : r.report, o, out);
        return r.code;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        try {
            emit(error_json(o.command, e), o, out);
        } catch (const InputError&) {
        }
        return kInputError;
    }
}

}  // namespace wdvv::cli
