// afflab command line: pressure / dimension / genericity tooling for tuples
// of invertible contracting matrices. One command per process; reports go to
// stdout, CSV tables to --out.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "afflab/afflab.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 64;
constexpr int kExitInput = 65;
constexpr int kExitPrecondition = 66;
constexpr int kExitResource = 67;
constexpr int kExitInternal = 70;

struct Options {
    std::string input;
    std::string out;
    std::uint64_t seed = 1;
    int n_max = 8;
    double tol = 1e-5;
    int threads = 1;

    double s = 1.0;
    bool norm_pressure = false;
    long long p = 1, q = 2;
    int k = 1;
    int trials = 100;
    int max_len = 6;
    int index = 0;
    int d = 2;
    int n_maps = 2;
    double cap = 0.5;
    bool with_drop = false;
    std::string which;
};

std::uint64_t word_budget_from_env() {
    if (const char* env = std::getenv("AFFLAB_BUDGET")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0' && v > 0) return static_cast<std::uint64_t>(v);
        throw afflab::InputError("AFFLAB_BUDGET must be a positive integer");
    }
    return afflab::kDefaultWordBudget;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw afflab::InputError("cannot open input file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

afflab::MatrixTuple load_tuple(const Options& opt) {
    if (opt.input.empty()) throw CLI::RequiredError("--input");
    return afflab::to_matrix_tuple(afflab::parse_tuple_document(read_file(opt.input)));
}

void write_csv(const Options& opt, const std::string& csv) {
    if (opt.out.empty()) return;
    std::ofstream out(opt.out, std::ios::binary);
    if (!out) throw afflab::InputError("cannot open output file: " + opt.out);
    out << csv;
}

using afflab::fmt17;

void print_estimate(const afflab::PressureEstimate& est, const char* kind) {
    std::cout << "pressure kind=" << kind << " s=" << fmt17(est.s) << "\n";
    for (const afflab::PressureSample& s : est.samples)
        std::cout << "  n=" << s.n << " a_n=" << fmt17(s.log_sum)
                  << " a_n/n=" << fmt17(s.value) << "\n";
    std::cout << "value=" << fmt17(est.value) << "\n";
    std::cout << "upper-bound=" << fmt17(est.upper_bound) << "\n";
    std::cout << "uncertainty=" << fmt17(est.uncertainty) << "\n";
}

std::string estimate_csv(const afflab::PressureEstimate& est) {
    afflab::CsvBuilder csv({"n", "a_n", "a_n_over_n"});
    for (const afflab::PressureSample& s : est.samples)
        csv.row({std::to_string(s.n), fmt17(s.log_sum), fmt17(s.value)});
    return csv.str();
}

int cmd_pressure(const Options& opt) {
    const afflab::MatrixTuple t = load_tuple(opt);
    afflab::PressureOptions popts;
    popts.word_budget = word_budget_from_env();
    popts.threads = opt.threads;
    const afflab::PressureEstimate est =
        opt.norm_pressure ? afflab::norm_pressure_estimate(t, opt.s, opt.n_max, popts)
                          : afflab::pressure_estimate(t, opt.s, opt.n_max, popts);
    print_estimate(est, opt.norm_pressure ? "norm" : "svf");
    write_csv(opt, estimate_csv(est));
    return kExitOk;
}

int cmd_affdim(const Options& opt) {
    const afflab::MatrixTuple t = load_tuple(opt);
    afflab::AffinityOptions aopts;
    aopts.word_budget = word_budget_from_env();
    aopts.threads = opt.threads;
    aopts.n_max_diagnostics = opt.n_max;
    const afflab::AffinityDimensionResult res = afflab::affinity_dimension(t, opt.tol, aopts);
    std::cout << "dimension=" << fmt17(res.dimension) << "\n";
    std::cout << "bracket=[" << fmt17(res.bracket_lo) << "," << fmt17(res.bracket_hi) << "]\n";
    std::cout << "pressure-at-dimension=" << fmt17(res.pressure_at_dimension) << "\n";
    std::cout << "bisection-depth=" << res.bisection_depth << "\n";
    write_csv(opt, estimate_csv(res.diagnostics));
    return kExitOk;
}

int cmd_exterior(const Options& opt) {
    const afflab::MatrixTuple t = load_tuple(opt);
    afflab::CsvBuilder csv({"matrix", "grade", "row", "col", "value"});
    const int lo = opt.index > 0 ? opt.index : 1;
    const int hi = opt.index > 0 ? opt.index : t.count();
    for (int m = lo; m <= hi; ++m) {
        const afflab::SquareMatrix ext = afflab::exterior_power(t.map(m), opt.k);
        std::cout << "matrix " << m << " grade " << opt.k << " (" << ext.n << "x" << ext.n
                  << "):\n";
        for (int i = 0; i < ext.n; ++i) {
            std::cout << " ";
            for (int j = 0; j < ext.n; ++j) {
                std::cout << " " << fmt17(ext(i, j));
                csv.row({std::to_string(m), std::to_string(opt.k), std::to_string(i),
                         std::to_string(j), fmt17(ext(i, j))});
            }
            std::cout << "\n";
        }
    }
    write_csv(opt, csv.str());
    return kExitOk;
}

int cmd_lift(const Options& opt) {
    const afflab::MatrixTuple t = load_tuple(opt);
    afflab::PressureOptions popts;
    popts.word_budget = word_budget_from_env();
    popts.threads = opt.threads;
    const afflab::RationalConsistencyReport rep =
        afflab::rational_pressure_consistency(t, opt.p, opt.q, opt.n_max, popts);
    std::cout << "lift p=" << rep.p << " q=" << rep.q << " grade=" << rep.grade
              << " lifted-dim=" << rep.lifted_dim << "\n";
    for (std::size_t i = 0; i < rep.generator_residuals.size(); ++i)
        std::cout << "  generator " << (i + 1)
                  << " |log phi - (1/q) log||lift|| | = " << fmt17(rep.generator_residuals[i])
                  << "\n";
    for (const afflab::RationalConsistencyRow& row : rep.rows)
        std::cout << "  n=" << row.n << " svf=" << fmt17(row.svf_sample)
                  << " lift=" << fmt17(row.lift_sample) << " diff=" << fmt17(row.abs_diff) << "\n";
    std::cout << "max-abs-diff=" << fmt17(rep.max_abs_diff) << "\n";
    afflab::CsvBuilder csv({"n", "svf_sample", "lift_sample", "abs_diff"});
    for (const afflab::RationalConsistencyRow& row : rep.rows)
        csv.row({std::to_string(row.n), fmt17(row.svf_sample), fmt17(row.lift_sample),
                 fmt17(row.abs_diff)});
    write_csv(opt, csv.str());
    return kExitOk;
}

void print_irreducibility(const afflab::IrreducibilityReport& rep) {
    std::cout << "verdict: " << afflab::to_string(rep.verdict) << "\n";
    std::cout << "space-dimension: " << rep.space_dim << "\n";
    std::cout << "algebra-dimension: " << rep.algebra_dimension << "\n";
    if (rep.verdict == afflab::IrreducibilityVerdict::ReducibleCertified) {
        std::cout << "invariant-subspace-dimension: " << rep.invariant_basis.size() << "\n";
        std::cout << "invariance-defect: " << fmt17(rep.invariance_defect) << "\n";
        for (const std::vector<double>& b : rep.invariant_basis) {
            std::cout << "  basis:";
            for (double x : b) std::cout << " " << fmt17(x);
            std::cout << "\n";
        }
    }
    if (!rep.probe_span_dims.empty()) {
        std::cout << "probe-span-dimensions:";
        for (int dim : rep.probe_span_dims) std::cout << " " << dim;
        std::cout << "\n";
    }
}

int cmd_check(const Options& opt) {
    const afflab::MatrixTuple t = load_tuple(opt);
    afflab::IrreducibilityOptions iopts;
    iopts.seed = opt.seed;
    if (opt.which == "irred") {
        print_irreducibility(afflab::check_irreducible(t, iopts));
    } else if (opt.which == "k-irred") {
        print_irreducibility(afflab::check_k_irreducible(t, opt.k, iopts));
    } else if (opt.which == "s-irred") {
        const afflab::IrreducibilityReport rep =
            afflab::check_s_irreducible_sufficient(t, opt.k, iopts);
        print_irreducibility(rep);
        if (rep.verdict == afflab::IrreducibilityVerdict::IrreducibleCertified)
            std::cout << "implies: s-irreducible for " << opt.k << " < s < " << (opt.k + 1)
                      << "\n";
        else
            std::cout << "implies: nothing (the test is one-way)\n";
    } else if (opt.which == "eigcond") {
        afflab::EigPairOptions eopts;
        const afflab::EigenvalueConditionSummary summary =
            afflab::check_eigenvalue_condition(t, eopts);
        std::cout << "verdict: " << (summary.satisfied ? "pass" : "fail") << "\n";
        afflab::CsvBuilder csv(
            {"i", "j", "distinct_i", "distinct_j", "e1", "e1_min_gap", "e2", "e2_min_minor"});
        for (const afflab::EigenvalueConditionReport& p : summary.pairs) {
            std::cout << "pair (" << p.i << "," << p.j << "): distinct=" << (p.distinct_i ? "y" : "n")
                      << (p.distinct_j ? "y" : "n") << " E1=" << (p.e1 ? "pass" : "fail")
                      << " gap=" << fmt17(p.e1_min_gap) << " E2=" << (p.e2 ? "pass" : "fail")
                      << " min-minor=" << fmt17(p.e2_min_minor) << "\n";
            csv.row({std::to_string(p.i), std::to_string(p.j), p.distinct_i ? "1" : "0",
                     p.distinct_j ? "1" : "0", p.e1 ? "1" : "0", fmt17(p.e1_min_gap),
                     p.e2 ? "1" : "0", fmt17(p.e2_min_minor)});
        }
        write_csv(opt, csv.str());
    } else if (opt.which == "cs") {
        afflab::CsOptions copts;
        copts.max_len = opt.max_len;
        copts.seed = opt.seed;
        const afflab::CsSearchResult res =
            afflab::check_condition_Cs_sampled(t, opt.k, opt.trials, copts);
        if (res.counterexample_found) {
            std::cout << "verdict: counterexample-found (no witness word up to length "
                      << res.max_word_length << ")\n";
            auto dump = [](const char* name, const std::vector<double>& v) {
                std::cout << "  " << name << ":";
                for (double x : v) std::cout << " " << fmt17(x);
                std::cout << "\n";
            };
            dump("v1", res.counterexample.v1);
            dump("w1", res.counterexample.w1);
            dump("v2", res.counterexample.v2);
            dump("w2", res.counterexample.w2);
        } else {
            std::cout << "verdict: no-counterexample-found\n";
            std::cout << "trials: " << res.trials_run
                      << " longest-witness: " << res.longest_witness_length << "\n";
        }
    } else {
        throw CLI::ValidationError("check", "unknown check name: " + opt.which);
    }
    return kExitOk;
}

int cmd_gibbs(const Options& opt) {
    const afflab::MatrixTuple t = load_tuple(opt);
    afflab::VariationalOptions vopts;
    vopts.word_budget = word_budget_from_env();
    vopts.threads = opt.threads;
    const afflab::VariationalDiagnostics diag =
        afflab::variational_check(t, opt.s, opt.n_max, vopts);
    std::cout << "entropy=" << fmt17(diag.entropy) << "\n";
    std::cout << "lyapunov=" << fmt17(diag.lyapunov) << "\n";
    std::cout << "pressure=" << fmt17(diag.pressure) << "\n";
    std::cout << "slack=" << fmt17(diag.slack) << "\n";
    std::cout << "gibbs-constant=" << fmt17(diag.gibbs_constant) << "\n";
    const afflab::CylinderMeasure m =
        afflab::gibbs_approximation(t, opt.s, opt.n_max, {.word_budget = word_budget_from_env()});
    const std::vector<double> gaps = afflab::sigma_invariance_gaps(m);
    afflab::CsvBuilder csv({"level", "sigma_invariance_gap"});
    for (std::size_t lvl = 0; lvl < gaps.size(); ++lvl) {
        std::cout << "sigma-gap level " << lvl << ": " << fmt17(gaps[lvl]) << "\n";
        csv.row({std::to_string(lvl), fmt17(gaps[lvl])});
    }
    write_csv(opt, csv.str());
    return kExitOk;
}

int cmd_drop(const Options& opt) {
    const afflab::MatrixTuple t = load_tuple(opt);
    afflab::DropOptions dopts;
    dopts.dimension_tol = opt.tol;
    dopts.affinity.word_budget = word_budget_from_env();
    dopts.affinity.threads = opt.threads;
    const afflab::DropReport rep = afflab::drop_experiment(t, dopts);
    std::cout << "base-dimension=" << fmt17(rep.base.dimension) << "\n";
    std::cout << "conditions: cap<" << fmt17(dopts.cap_requirement) << " "
              << (rep.conditions.cap_ok ? "ok" : "violated")
              << " (max-norm=" << fmt17(rep.conditions.max_norm) << "), eigenvalue-condition "
              << (rep.conditions.eigenvalue_condition.satisfied ? "pass" : "fail") << "\n";
    afflab::CsvBuilder csv({"removed", "reduced_dimension", "gap", "combined_tolerance", "clears"});
    for (const afflab::DropEntry& e : rep.removed) {
        std::cout << "  removed " << e.removed << ": dimension=" << fmt17(e.result.dimension)
                  << " gap=" << fmt17(e.gap) << " tolerance=" << fmt17(e.combined_tolerance)
                  << "\n";
        csv.row({std::to_string(e.removed), fmt17(e.result.dimension), fmt17(e.gap),
                 fmt17(e.combined_tolerance), e.gap > e.combined_tolerance ? "1" : "0"});
    }
    std::cout << "strict-drop: " << (rep.strict_drop_asserted ? "asserted" : "not asserted")
              << "\n";
    write_csv(opt, csv.str());
    return kExitOk;
}

int cmd_survey(const Options& opt) {
    afflab::SurveyOptions sopts;
    sopts.cap = opt.cap;
    sopts.with_drop = opt.with_drop;
    sopts.threads = opt.threads;
    sopts.drop.dimension_tol = opt.tol;
    const afflab::SurveyReport rep =
        afflab::genericity_survey(opt.d, opt.n_maps, opt.trials, opt.seed, sopts);
    std::cout << "survey d=" << rep.d << " N=" << rep.n_maps << " trials=" << rep.trials
              << " seed=" << rep.seed << "\n";
    std::cout << "eigenvalue-condition pass fraction: " << fmt17(rep.eig_pass_fraction) << "\n";
    if (opt.with_drop)
        std::cout << "strict-drop fraction: " << fmt17(rep.strict_drop_fraction) << "\n";
    afflab::CsvBuilder csv({"trial", "sub_seed", "ok", "eig_pass", "e1_min_gap", "e2_min_minor",
                            "best_pair_i", "best_pair_j", "drop_checked", "strict_drop",
                            "min_gap"});
    for (const afflab::SurveyTrial& row : rep.rows) {
        csv.row({std::to_string(row.index), std::to_string(row.sub_seed), row.ok ? "1" : "0",
                 row.eig_pass ? "1" : "0", fmt17(row.e1_min_gap), fmt17(row.e2_min_minor),
                 std::to_string(row.best_pair_i), std::to_string(row.best_pair_j),
                 row.drop_checked ? "1" : "0", row.strict_drop ? "1" : "0",
                 row.drop_checked ? fmt17(row.min_gap) : std::string("")});
    }
    write_csv(opt, csv.str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"afflab: singular value pressure, affinity dimension and dimension-drop "
                 "experiments for tuples of invertible contracting matrices"};
    app.require_subcommand(1);
    app.fallthrough();

    Options opt;
    app.add_option("--input", opt.input, "tuple document (JSON)");
    app.add_option("--out", opt.out, "CSV output path");
    app.add_option("--seed", opt.seed, "random seed");
    app.add_option("--n-max", opt.n_max, "maximum enumeration depth");
    app.add_option("--tol", opt.tol, "bracket / bisection tolerance");
    app.add_option("--threads", opt.threads, "parallelism degree");

    CLI::App* pressure = app.add_subcommand("pressure", "singular value (or norm) pressure");
    pressure->add_option("--s", opt.s, "exponent")->required();
    pressure->add_flag("--norm", opt.norm_pressure, "norm pressure instead of svf pressure");

    app.add_subcommand("affdim", "affinity dimension by bisection");

    CLI::App* exterior = app.add_subcommand("exterior", "exterior powers of the tuple's maps");
    exterior->add_option("--k", opt.k, "grade")->required();
    exterior->add_option("--index", opt.index, "1-based matrix index (default: all)");

    CLI::App* lift = app.add_subcommand("lift", "rational tensor lift consistency");
    lift->add_option("--p", opt.p, "numerator")->required();
    lift->add_option("--q", opt.q, "denominator")->required();

    CLI::App* check = app.add_subcommand("check", "genericity / irreducibility checks");
    check->add_option("which", opt.which, "one of: irred, k-irred, s-irred, eigcond, cs")
        ->required()
        ->check(CLI::IsMember({"irred", "k-irred", "s-irred", "eigcond", "cs"}));
    check->add_option("--k", opt.k, "grade for k-irred / s-irred / cs");
    check->add_option("--trials", opt.trials, "quadruple trials for cs");
    check->add_option("--max-len", opt.max_len, "word length bound for cs");

    CLI::App* gibbs = app.add_subcommand("gibbs", "Gibbs cylinder approximation diagnostics");
    gibbs->add_option("--s", opt.s, "exponent")->required();

    app.add_subcommand("drop", "dimension-drop experiment");

    CLI::App* survey = app.add_subcommand("survey", "random-tuple genericity survey");
    survey->add_option("--d", opt.d, "ambient dimension");
    survey->add_option("--N", opt.n_maps, "number of maps");
    survey->add_option("--trials", opt.trials, "number of sampled tuples")->required();
    survey->add_option("--cap", opt.cap, "operator norm cap");
    survey->add_flag("--with-drop", opt.with_drop, "also run the drop experiment per trial");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (app.got_subcommand("pressure")) return cmd_pressure(opt);
        if (app.got_subcommand("affdim")) return cmd_affdim(opt);
        if (app.got_subcommand("exterior")) return cmd_exterior(opt);
        if (app.got_subcommand("lift")) return cmd_lift(opt);
        if (app.got_subcommand("check")) return cmd_check(opt);
        if (app.got_subcommand("gibbs")) return cmd_gibbs(opt);
        if (app.got_subcommand("drop")) return cmd_drop(opt);
        if (app.got_subcommand("survey")) return cmd_survey(opt);
        std::cerr << "usage error: no subcommand\n";
        return kExitUsage;
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const afflab::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const afflab::PreconditionError& e) {
        std::cerr << "precondition error: " << e.what() << "\n";
        return kExitPrecondition;
    } catch (const afflab::ResourceError& e) {
        std::cerr << "resource error: " << e.what() << "\n";
        return kExitResource;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
