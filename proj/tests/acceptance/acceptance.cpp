// Acceptance run: one line per criterion, "PASS"/"FAIL", measured values and
// wall time. Exit status is 0 when the set of failing criteria equals the
// set given with --expect-fail (empty by default).

#include <wdvv/wdvv.hpp>

#include "../../tools/cli.hpp"
#include "frozen_values.hpp"
#include "oracles/frame_exponential.hpp"
#include "support.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

using namespace wdvv;
using testing_support::antidiagonal_potential;
using testing_support::P;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    // Records a sub-check; failing sub-checks are named in the detail.
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[failed: " << what << "] ";
        }
    }
};

std::string sci(double x) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(2) << x;
    return os.str();
}

PsiSystem reduced(const std::string& f, int c = 1) { return reduce_potential(antidiagonal_potential(f), Rational(c)); }

const std::vector<std::string> kPerturbed{testing_support::kSol1Perturbed, std::string(testing_support::kSol1) + " + 1/6*u2^3",
                                          "1/6*u2^3*u3^2 + 1/20*u2^2*u3^5 + 1/3000*u3^11"};

Potential random_non_solution(std::mt19937& rng) {
    for (;;) {
        Potential p(testing_support::random_metric(rng, 3), testing_support::random_poly(rng, 3, 5, 5, 3));
        if (!all_zero(wdvv_residual(p))) return p;
    }
}

void wdvv_exactness(Outcome& o) {
    for (const char* f : {"0", testing_support::kSol1, testing_support::kSol2})
        o.require(all_zero(wdvv_residual(antidiagonal_potential(f))), std::string("zero residual for f = ") + f);
    std::size_t min_nonzero = SIZE_MAX;
    for (const auto& f : kPerturbed) {
        std::size_t nz = count_nonzero(wdvv_residual(antidiagonal_potential(f)));
        o.require(nz > 0, "nonzero residual for f = " + f);
        min_nonzero = std::min(min_nonzero, nz);
    }
    o.detail << "f=0, sol1, sol2 exactly zero; 3 perturbed variants nonzero (>= " << min_nonzero << " entries)";
}

void dubrovin_equation(Outcome& o) {
    for (const char* f : {testing_support::kSol1, testing_support::kSol2}) o.require(dubrovin_residual(P(f)).is_zero(), std::string("f = ") + f);
    o.detail << "f333 - f223^2 + f222 f233 = 0 for sol1, sol2";
}

void reduction_coincidence(Outcome& o) {
    std::mt19937 rng(20240611);
    std::vector<Potential> corpus{antidiagonal_potential(testing_support::kSol1), antidiagonal_potential(testing_support::kSol2)};
    for (int k = 0; k < 5; ++k) corpus.push_back(random_non_solution(rng));
    std::size_t combos = 0;
    for (std::size_t k = 0; k < corpus.size(); ++k) {
        PolyTensor w = wdvv_residual(corpus[k]);
        std::vector<Poly> basis(w.begin(), w.end());
        const bool solves = all_zero(w);
        o.require(solves == (k < 2), "potential " + std::to_string(k + 1) + " has the expected WDVV status");
        for (int c : {1, -1}) {
            PsiSystem s = reduce_potential(corpus[k], c);
            for (const PolyTensor& r : {gauss_residual(s), ricci_residual(s)}) {
                o.require(all_zero(r) == solves, "simultaneous vanishing, potential " + std::to_string(k + 1) + ", c = " + std::to_string(c));
                for (const auto& e : r) {
                    if (e.is_zero()) continue;
                    o.require(span_coefficients(e, basis).has_value(), "entry is a combination of WDVV entries");
                    ++combos;
                }
            }
        }
    }
    o.detail << "sol1, sol2 + 5 random potentials, c = +-1: vanishing coincides; " << combos << " nonzero entries all in the span of WDVV entries";
}

void affinor_match(Outcome& o) {
    FlatHamOp h = affinors_from_psi(reduced(testing_support::kSol1));
    // Closed form with a = f222 = 0, b = f223 = u3, c = f233 = u2.
    auto pm = [](const std::vector<std::vector<std::string>>& rows) {
        PolyMatrix m(3, 3, 3);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) m(i, j) = P(rows[i][j]);
        return m;
    };
    o.require(h.affinors.size() == 3, "three affinors");
    if (h.affinors.size() != 3) return;
    o.require(h.affinors[0] == PolyMatrix::identity(3, 3), "w1 = identity");
    o.require(h.affinors[1] == pm({{"0", "u3", "u2"}, {"1", "0", "u3"}, {"0", "1", "0"}}), "w2");
    o.require(h.affinors[2] == pm({{"0", "u2", "u3^2"}, {"0", "u3", "u2"}, {"1", "0", "0"}}), "w3");
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = a + 1; b < 3; ++b) {
            PolyMatrix comm = h.affinors[a] * h.affinors[b] - h.affinors[b] * h.affinors[a];
            o.require(std::all_of(comm.begin(), comm.end(), [](const Poly& p) { return p.is_zero(); }), "commutator");
        }
    o.require(check_relations(h)["05"].pass(), "relation 05");
    o.detail << "w1, w2, w3 reproduced exactly; pairwise commutators zero";
}

void hamiltonian_relations(Outcome& o) {
    FlatHamOp sol1 = affinors_from_psi(reduced(testing_support::kSol1));
    FlatHamOp constant{ConstSymMatrix::antidiagonal_ones(3), ConstSymMatrix::identity(2), {PolyMatrix(3, 3, 3), PolyMatrix(3, 3, 3)}};
    for (const auto& [name, h] : {std::pair{"sol1 operator", sol1}, std::pair{"constant operator", constant}}) {
        RelationsReport r = check_relations(h);
        o.require(r.relations.size() == 7 && r.all_pass(), std::string("01-07 on ") + name);
        RelationsReport pencil = pencil_check(h);
        o.require(pencil.all_pass() && pencil["07-left"].pass() && pencil["07-right"].pass(), std::string("pencil on ") + name);
    }
    o.detail << "01-07 exact on sol1 and zero-affinor operators; both sides of 07 vanish separately";
}

void zero_curvature(Outcome& o) {
    o.require(zero_curvature_residual(reduced(testing_support::kSol1)).is_zero(), "reduced sol1 is flat");
    o.require(!zero_curvature_residual(reduced(testing_support::kSol1Perturbed)).is_zero(), "perturbed system is not flat");
    o.detail << "reduced sol1 zero in (u, lambda, rho); perturbed nonzero";
}

void hierarchy_recursion(Outcome& o) {
    PsiSystem s = reduced(testing_support::kSol1);
    auto levels = build_hierarchy(s, 3);
    auto omega = second_forms(s);
    o.require(levels.size() == 3, "three levels");
    for (const auto& lv : levels) {
        for (std::size_t n = 0; n < 3; ++n)
            for (std::size_t p = 0; p < 3; ++p) {
                Poly rhs(3);
                for (std::size_t j = 0; j < 3; ++j)
                    for (std::size_t r = 0; r < 3; ++r) rhs += s.eta().inv(j, r) * omega[n](j, p) * lv.h.derivative(r);
                o.require(lv.f_lift[n].derivative(p) == rhs, "gradient relation at level " + std::to_string(lv.s));
            }
        o.require(hessian(lv.h_next) == recursion_hessian(s, lv.f_lift), "Hessian relation at level " + std::to_string(lv.s));
        o.require(lv.h == P(frozen::sol1_h[lv.s - 1]), "h_" + std::to_string(lv.s) + " matches the independent derivation");
    }
    o.require(levels[0].f_lift[0] == P("u1*u3 + 1/2*u2^2"), "F^(1)_1");
    o.require(all_zero(flows_commute_residual(levels[0].flow, levels[1].flow)), "flows 1 and 2 commute");
    o.detail << "depth 3; gradient and Hessian relations exact; F^(1)_1 = u1*u3 + 1/2*u2^2; flows 1, 2 commute";
}

void involution(Outcome& o) {
    PsiSystem s = reduced(testing_support::kSol1);
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b) o.require(all_zero(involution_residual_constant_bracket(s, a, b)), "psi pair");
    for (const char* f : {testing_support::kSol1, testing_support::kSol2})
        o.require(all_zero(involution_wdvv_integrals(antidiagonal_potential(f))), std::string("WDVV integrals for ") + f);
    std::mt19937 rng(99);
    std::vector<Potential> corpus;
    for (const auto& f : kPerturbed) corpus.push_back(antidiagonal_potential(f));
    for (int k = 0; k < 3; ++k) corpus.push_back(random_non_solution(rng));
    corpus.push_back(antidiagonal_potential(testing_support::kSol1b));
    for (const auto& p : corpus) o.require(all_zero(involution_wdvv_integrals(p)) == all_zero(wdvv_residual(p)), "integrals fail exactly with WDVV");
    o.require(all_zero(check_eq10(antidiagonal_potential("0"))), "eq10 for f = 0");
    Potential cubic(ConstSymMatrix::antidiagonal_ones(3), P("u1^3 + 2*u1*u2*u3 - u2^3 + 3*u1^2*u3 + u3^3 - u1*u2^2"));
    o.require(!all_zero(check_eq10(cubic)), "eq10 nonzero for a random cubic");
    o.detail << "all 9 psi pairs zero; WDVV integrals zero for sol1, sol2, failing exactly with WDVV on 7 potentials; eq10 f=0 zero, cubic nonzero";
}

Eigen::VectorXd flatten(const Frame& f) {
    using frame_oracle::kM;
    using frame_oracle::kN;
    Eigen::VectorXd x(frame_oracle::kState);
    for (int a = 0; a < kM; ++a) {
        x(frame_oracle::r_at(a)) = f.r[a];
        x(frame_oracle::n_at(a)) = f.n[a];
        for (int i = 0; i < kN; ++i) {
            x(frame_oracle::R_at(a, i)) = f.R(a, i);
            x(frame_oracle::Nn_at(a, i)) = f.Nn(a, i);
        }
    }
    return x;
}

EmbeddingProblem embedding(const std::string& f, int c = 1) { return default_initial_frame(antidiagonal_potential(f), Rational(c), Point::Zero(3)); }

void realization(Outcome& o) {
    const Eigen::Vector3d unit(1.0 / 3, 2.0 / 3, 2.0 / 3);
    // (i) matrix-exponential oracle
    double oracle_err = 0.0;
    for (int c : {1, -1}) {
        EmbeddingProblem e = embedding("0", c);
        Eigen::VectorXd exact = frame_oracle::transport(unit, c);
        oracle_err = std::max(oracle_err, (flatten(integrate_along_path(e, {Point(unit)}, 1e-3).frames.back()) - exact).cwiseAbs().maxCoeff());
    }
    o.require(oracle_err <= 1e-8, "(i) oracle");
    // (ii) sol1 on a 5x5x5 grid, spacing 0.05; second derivatives by a 1e-3 stencil
    EmbeddingProblem sol1 = embedding(testing_support::kSol1);
    FormsReport forms = verify_fundamental_forms(sol1, sample_grid(sol1, {Point::Zero(3), 0.05, {5, 5, 5}}, 1e-3, 1e-3), 1e-6);
    FormsReport neighbour = verify_fundamental_forms(sol1, sample_grid(sol1, {Point::Zero(3), 0.05, {5, 5, 5}}, 1e-3), 1e-6);
    const double gram = std::max({forms.max_a, forms.max_b, forms.max_c});
    o.require(forms.passes(), "(ii) forms");
    // (iii) loop closure, side 0.1 in the (u2, u3) plane
    Path loop = square_loop(Point(Eigen::Vector3d(0.0, 0.1, 0.1)), 1, 2, 0.1);
    const double closed = loop_closure_test(sol1, loop, 1e-3);
    const double open = loop_closure_test(embedding(testing_support::kSol1Perturbed), loop, 1e-3);
    o.require(closed < 1e-7, "(iii) sol1 loop");
    o.require(open >= 100 * std::max(closed, 1e-16), "(iii) perturbed loop at least 100x larger");
    // (iv) Gram-drift order in step size
    double lo = INFINITY, hi = -INFINITY;
    for (const char* f : {"0", testing_support::kSol1}) {
        EmbeddingProblem e = embedding(f);
        std::vector<double> drift;
        for (double h : {0.1, 0.05, 0.025}) drift.push_back(gram_drift(e, integrate_along_path(e, {Point(2 * unit)}, h)));
        for (std::size_t k = 0; k + 1 < drift.size(); ++k) {
            double order = std::log2(drift[k] / drift[k + 1]);
            lo = std::min(lo, order);
            hi = std::max(hi, order);
        }
    }
    o.require(lo >= 3.5 && hi <= 4.5, "(iv) Gram-drift order in [3.5, 4.5]");
    o.detail << "(i) oracle " << sci(oracle_err) << "; (ii) Gram " << sci(gram) << ", second form " << sci(forms.max_d)
             << " (grid-neighbour differences: " << sci(neighbour.max_d) << "); (iii) loop sol1 " << sci(closed) << ", perturbed " << sci(open)
             << "; (iv) Gram-drift order " << std::fixed << std::setprecision(2) << lo << ".." << hi
             << " (RK4 preserves the Gram matrix to O(h^6) per step for this skew-adjoint system, so the global order is 5)";
}

void simulation(Outcome& o) {
    PsiSystem s = reduced(testing_support::kSol1);
    auto levels = build_hierarchy(s, 2);
    std::vector<Poly> densities{levels[0].h, levels[1].h};
    HydroFlow w2 = structural_flows(affinors_from_psi(s))[1];
    const std::vector<double> phases{0.0, 1.0, 2.0};
    auto drift = [&](std::size_t m, double dt) {
        Grid1D g(m);
        return conservation_report(simulate_flow(w2, sine_state(g, phases, 0.01), g, {dt, 0.1, 5}), densities, g);
    };
    std::vector<double> coarse = drift(256, 0.002), fine = drift(512, 0.001);
    for (std::size_t d = 0; d < 2; ++d) {
        o.require(coarse[d] < 1e-4, "H" + std::to_string(d + 1) + " drift below 1e-4");
        o.require(fine[d] < coarse[d], "H" + std::to_string(d + 1) + " drift decreases under refinement");
    }
    Grid1D g(256);
    FieldState init = sine_state(g, phases, 0.01);
    auto trip = simulate_flow(HydroFlow{PolyMatrix::identity(3, 3)}, init, g, {g.dx() / 10, g.length(), 100});
    const double round_trip = (trip.back().values - init.values).cwiseAbs().maxCoeff() / 0.01;
    o.require(round_trip < 1e-4, "translation round trip");
    o.detail << "drift H1 " << sci(coarse[0]) << " -> " << sci(fine[0]) << ", H2 " << sci(coarse[1]) << " -> " << sci(fine[1])
             << " (m 256 -> 512); translation round trip " << sci(round_trip);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void parser_cli(Outcome& o) {
    namespace fs = std::filesystem;
    const fs::path data = WDVV_DATA_DIR;
    auto invoke = [](std::vector<std::string> args, std::string& out) {
        std::ostringstream os, err;
        int code = cli::run(std::move(args), os, err);
        out = os.str();
        return code;
    };
    auto entries = cli::json::parse(slurp(data / "corpus.json"))["entries"];
    std::size_t checked = 0;
    for (const auto& entry : entries) {
        std::vector<std::string> args;
        for (const auto& a : entry["args"]) {
            std::string s = a.get<std::string>();
            args.push_back(s.ends_with(".json") ? (data / "problems" / s).string() : s);
        }
        std::string first, second;
        const int code = invoke(args, first);
        invoke(args, second);
        const std::string name = entry["name"];
        o.require(code == entry["exit"].get<int>(), name + " exit code");
        o.require(first == second, name + " byte-stable");
        o.require(first == slurp(data / "golden" / (name + ".json")), name + " golden");
        ++checked;
    }
    std::size_t round_trips = 0;
    for (const auto& f : fs::directory_iterator(data / "problems")) {
        std::optional<cli::Problem> p;
        try {
            p = cli::load_problem(f.path().string());
        } catch (const cli::InputError&) {
            continue;
        }
        std::vector<Poly> exprs;
        if (p->potential) exprs.push_back(p->potential->phi());
        if (p->psi) exprs.insert(exprs.end(), p->psi->psi().begin(), p->psi->psi().end());
        for (const auto& e : exprs) {
            o.require(parse_polynomial(format_polynomial(e), p->n) == e, "expression round trip in " + f.path().filename().string());
            ++round_trips;
        }
        if (p->kind == "psi_system")
            o.require(cli::psi_system_json(*p->psi, p->name).dump(2) + "\n" == slurp(f.path()), "document round trip " + f.path().filename().string());
    }
    o.detail << checked << " corpus commands: exit codes, two-run byte equality and goldens hold; " << round_trips << " expressions round-trip";
}

struct Criterion {
    int id;
    const char* title;
    double budget_s;
    std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria 1-11"};
    std::vector<int> expect_fail;
    app.add_option("--expect-fail", expect_fail, "criteria whose failure is documented; exit 0 iff exactly these fail")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    constexpr double kNoBudget = INFINITY;
    const std::vector<Criterion> criteria{
        {1, "WDVV exactness", 5, wdvv_exactness},
        {2, "Dubrovin equation", kNoBudget, dubrovin_equation},
        {3, "Reduction coincidence", kNoBudget, reduction_coincidence},
        {4, "Affinor match", kNoBudget, affinor_match},
        {5, "Hamiltonian relations", kNoBudget, hamiltonian_relations},
        {6, "Zero curvature", kNoBudget, zero_curvature},
        {7, "Hierarchy recursion", 60, hierarchy_recursion},
        {8, "Involution", kNoBudget, involution},
        {9, "Realization numerics", 120, realization},
        {10, "Simulation conservation", kNoBudget, simulation},
        {11, "Parser/CLI", kNoBudget, parser_cli},
    };

    std::set<int> failed;
    for (const auto& c : criteria) {
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "[exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > c.budget_s) o.require(false, "runtime over " + std::to_string(static_cast<int>(c.budget_s)) + " s");
        if (!o.pass) failed.insert(c.id);
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << c.id << "  " << c.title << ": " << o.detail.str() << " ("
                  << std::fixed << std::setprecision(2) << secs << " s)" << std::endl;
    }
    const std::set<int> expected(expect_fail.begin(), expect_fail.end());
    std::cout << "failed: " << failed.size() << " of " << criteria.size();
    if (!expected.empty()) std::cout << "; documented failures: " << expected.size();
    std::cout << std::endl;
    return failed == expected ? 0 : 1;
}
