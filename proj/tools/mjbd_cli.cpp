#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mjbd/bjbdp.hpp"
#include "mjbd/diagnostics.hpp"
#include "mjbd/io.hpp"
#include "mjbd/linalg.hpp"
#include "mjbd/synth.hpp"

using nlohmann::json;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitRank = 3;
constexpr int kExitNumerical = 4;

mjbd::Partition parse_tau(const std::string& spec) {
    std::vector<int> parts;
    std::stringstream stream(spec);
    std::string token;
    while (std::getline(stream, token, ',')) {
        try {
            parts.push_back(std::stoi(token));
        } catch (const std::exception&) {
            throw mjbd::InputError("invalid partition entry '" + token + "'");
        }
    }
    if (parts.empty()) {
        throw mjbd::InputError("empty partition");
    }
    return mjbd::Partition(parts);
}

double parse_snr(const std::string& text) {
    if (text == "inf" || text == "Inf" || text == "INF") {
        return std::numeric_limits<double>::infinity();
    }
    return std::stod(text);
}

json finite_or_string(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (std::isnan(value)) return nullptr;
    return value;
}

json spectrum_to_json(const Eigen::VectorXcd& eigs) {
    json out = json::array();
    for (Eigen::Index i = 0; i < eigs.size(); ++i) {
        out.push_back({eigs(i).real(), eigs(i).imag()});
    }
    return out;
}

json solve_report(const mjbd::SolveResult& result, const std::string& input, int m, int d,
                  const mjbd::SolveOptions& opts, double wall_time_s) {
    json report;
    report["report_version"] = 1;
    report["input"] = input;
    report["m"] = m;
    report["d"] = d;
    report["seed"] = opts.seed;
    report["xi"] = opts.xi;
    report["delta"] = opts.delta ? json(*opts.delta) : json("auto");
    report["p"] = result.solution.rank;
    report["singular_values"] = std::vector<double>(
        result.profile.singular_values.data(),
        result.profile.singular_values.data() + result.profile.singular_values.size());
    report["tau_hat"] = result.solution.partition.parts();
    report["f_A"] = result.solution.residual;
    report["A_cond"] = finite_or_string(result.a_condition);
    json splits = json::array();
    for (const mjbd::SplitRecord& rec : result.history) {
        json item;
        item["block_index"] = rec.block_index;
        item["offset"] = rec.offset;
        item["q"] = rec.q;
        item["q1"] = rec.q1;
        item["q2"] = rec.q2;
        if (rec.q1 > 0) {
            item["rho1"] = rec.rho1;
            item["rho2"] = rec.rho2;
            item["split_residual"] = rec.split_residual;
            item["discarded_coupling"] = rec.discarded_coupling;
            item["z_condition"] = rec.z_condition;
        }
        item["delta"] = rec.delta_used;
        item["x_star_spectrum"] = spectrum_to_json(rec.x_star_spectrum);
        if (!rec.note.empty()) item["note"] = rec.note;
        splits.push_back(item);
    }
    report["splits"] = splits;
    report["warnings"] = result.warnings;
    // wall time is excluded from the determinism contract
    report["wall_time_s"] = wall_time_s;
    return report;
}

void emit(const json& payload, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << payload.dump(2) << "\n";
    } else {
        std::ofstream out(out_path);
        if (!out) throw mjbd::InputError("cannot open " + out_path);
        out << payload.dump(2) << "\n";
    }
}

int cmd_synth(const std::string& out, int m, int n, int p, const std::string& tau_spec,
              const std::string& snr_spec, std::uint64_t seed, bool isa, int samples) {
    mjbd::Partition tau = parse_tau(tau_spec);
    double snr = parse_snr(snr_spec);

    mjbd::PlantedInstance inst;
    if (isa) {
        inst = mjbd::gen_isa_covariances(tau, n, m, samples, seed);
    } else {
        if (tau.total() != p) {
            throw mjbd::InputError("partition " + tau_spec + " does not sum to p=" +
                                   std::to_string(p));
        }
        inst = mjbd::gen_example1(m, n, p, tau, snr, seed);
    }

    mjbd::FileExtras extras;
    extras.partition = tau.parts();
    extras.seed = seed;
    extras.snr_db = snr;
    mjbd::write_matrix_set(out, inst.observed, extras);
    mjbd::write_truth_sidecar(out, inst, snr);
    std::cerr << "wrote " << out << " (m=" << inst.observed.m() << ", d=" << inst.observed.d()
              << ") with truth sidecar\n";
    return 0;
}

mjbd::SolveOptions make_solve_options(double xi, const std::string& delta_spec,
                                      std::uint64_t seed, std::optional<int> rank) {
    mjbd::SolveOptions opts;
    opts.xi = xi;
    opts.seed = seed;
    opts.rank = rank;
    if (delta_spec != "auto") {
        opts.delta = std::stod(delta_spec);
    }
    return opts;
}

int cmd_decompose(const std::string& in, double xi, const std::string& delta_spec,
                  std::uint64_t seed, std::optional<int> rank, const std::string& out_report,
                  const std::string& out_A) {
    auto file = mjbd::read_matrix_set(in);
    mjbd::SolveOptions opts = make_solve_options(xi, delta_spec, seed, rank);

    auto start = std::chrono::steady_clock::now();
    mjbd::SolveResult result = mjbd::solve_bjbdp(file.set, opts);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    emit(solve_report(result, in, file.set.m(), file.set.d(), opts, wall), out_report);
    if (!out_A.empty()) {
        mjbd::write_matrix(out_A, result.solution.diagonalizer);
    }
    return 0;
}

std::vector<mjbd::MatrixSet> slice_blocks(const mjbd::MatrixSet& sigmas,
                                          const mjbd::Partition& tau) {
    std::vector<mjbd::MatrixSet> families;
    for (int j = 0; j < tau.cardinality(); ++j) {
        std::vector<mjbd::Matrix> mats;
        for (const mjbd::Matrix& sigma : sigmas) {
            mats.push_back(
                sigma.block(tau.offset(j), tau.offset(j), tau.part(j), tau.part(j)));
        }
        families.push_back(mjbd::MatrixSet(std::move(mats)));
    }
    return families;
}

mjbd::BoundConstants parse_constants(const std::string& spec) {
    mjbd::BoundConstants constants;
    if (spec.empty()) return constants;
    std::stringstream stream(spec);
    std::string token;
    while (std::getline(stream, token, ',')) {
        auto eq = token.find('=');
        if (eq == std::string::npos) {
            throw mjbd::InputError("constants must look like C=1,kappa=1");
        }
        std::string key = token.substr(0, eq);
        double value = std::stod(token.substr(eq + 1));
        if (key == "C" || key == "c") {
            constants.C = value;
        } else if (key == "kappa" || key == "k") {
            constants.kappa = value;
        } else {
            throw mjbd::InputError("unknown constant '" + key + "'");
        }
    }
    return constants;
}

int cmd_diagnose(const std::string& in, const std::string& truth_path,
                 const std::string& constants_spec, double xi, const std::string& delta_spec,
                 std::uint64_t seed, double tol, const std::string& out_report) {
    auto file = mjbd::read_matrix_set(in);
    mjbd::BoundConstants constants = parse_constants(constants_spec);

    mjbd::SpectralProfile profile = mjbd::spectral_profile(file.set);

    json report;
    report["report_version"] = 1;
    report["input"] = in;

    mjbd::Partition tau;
    mjbd::Matrix A;
    std::optional<mjbd::TruthSidecar> truth;
    mjbd::SolveOptions opts = make_solve_options(xi, delta_spec, seed, std::nullopt);
    std::optional<mjbd::SolveResult> solved;

    if (!truth_path.empty()) {
        truth = mjbd::read_truth_sidecar(truth_path);
        tau = truth->partition;
        A = truth->A;
        opts.rank = tau.total();
    } else {
        solved = mjbd::solve_bjbdp(file.set, opts);
        tau = solved->solution.partition;
        A = solved->solution.diagonalizer;
    }

    // Block families of the analyzed solution.
    mjbd::Matrix pinv = mjbd::pseudo_inverse(A);
    std::vector<mjbd::Matrix> sigmas;
    for (const mjbd::Matrix& C : file.set) {
        sigmas.push_back(mjbd::block_diag_part(pinv * C * pinv.transpose(), tau));
    }
    std::vector<mjbd::MatrixSet> families = slice_blocks(mjbd::MatrixSet(sigmas), tau);

    const int p = tau.total();
    mjbd::NoiseContext noise;
    noise.phi_p = profile.singular_values(p - 1);
    noise.phi_tail = p < file.set.d() ? profile.singular_values(p) : 0.0;
    noise.d = file.set.d();

    mjbd::IdentifiabilityReport ident =
        mjbd::identifiability(families, tau, &A, constants, &noise);

    report["tau"] = tau.parts();
    report["omega_ir"] = finite_or_string(ident.omega_ir);
    report["omega_neq"] = finite_or_string(ident.omega_neq);
    report["p1_holds"] = ident.p1_holds;
    if (!ident.p1_holds) report["p1_offending_block"] = ident.p1_offending_block;
    report["p2_holds"] = ident.p2_holds;
    if (!ident.p2_holds) {
        report["p2_offending_pair"] = {ident.p2_offending_pair.first,
                                       ident.p2_offending_pair.second};
    }
    report["unique"] = ident.unique();
    report["epsilon"] = finite_or_string(ident.epsilon);
    report["r"] = finite_or_string(ident.r);
    report["g1"] = finite_or_string(ident.g1);
    report["g2"] = finite_or_string(ident.g2);
    report["constants"] = {{"C", constants.C}, {"kappa", constants.kappa},
                           {"note", "illustrative"}};

    if (truth) {
        // Compare the solver's output against the supplied truth. The
        // default equivalence tolerance tracks the measured noise level.
        if (!solved) solved = mjbd::solve_bjbdp(file.set, opts);
        double effective_tol =
            tol > 0.0 ? tol : std::max(1e-6, 10.0 * noise.phi_tail / noise.phi_p);
        mjbd::SolutionComparison cmp =
            mjbd::compare_solutions(truth->partition, truth->A, solved->solution.partition,
                                    solved->solution.diagonalizer, effective_tol);
        json comparison;
        comparison["equivalent"] = cmp.equivalent;
        comparison["permutation"] = cmp.permutation;
        comparison["block_error"] = finite_or_string(cmp.block_error);
        if (!cmp.note.empty()) comparison["note"] = cmp.note;
        report["comparison"] = comparison;
    }
    if (solved) {
        report["solution"] = {{"p", solved->solution.rank},
                              {"tau_hat", solved->solution.partition.parts()},
                              {"f_A", solved->solution.residual}};
    }
    emit(report, out_report);
    return 0;
}

int cmd_spectrum(const std::string& in, int count, const std::string& format) {
    auto file = mjbd::read_matrix_set(in);
    mjbd::SpectralProfile profile = mjbd::spectral_profile(file.set);
    const int d = file.set.d();
    if (count > d) {
        std::cerr << "count " << count << " clamped to d=" << d << "\n";
        count = d;
    }
    if (count < 1) {
        throw mjbd::InputError("count must be positive");
    }

    std::vector<int> indices;  // 1-based, largest first then smallest
    for (int i = 1; i <= count; ++i) indices.push_back(i);
    for (int i = d - count + 1; i <= d; ++i) {
        if (i > count) indices.push_back(i);
    }

    if (format == "json") {
        json rows = json::array();
        for (int i : indices) {
            rows.push_back({{"index", i}, {"value", profile.singular_values(i - 1)}});
        }
        std::cout << json({{"report_version", 1}, {"d", d}, {"singular_values", rows}}).dump(2)
                  << "\n";
    } else {
        std::cout << "index,value\n";
        std::cout.precision(17);
        for (int i : indices) {
            std::cout << i << "," << profile.singular_values(i - 1) << "\n";
        }
    }
    return 0;
}

int cmd_mc(int m, int n, int p, const std::string& tau_spec, const std::string& snr_spec,
           std::uint64_t seed, int trials, bool isa, int samples, double xi,
           const std::string& delta_spec, const std::string& out_report) {
    mjbd::Partition tau = parse_tau(tau_spec);
    double snr = parse_snr(snr_spec);
    if (!isa && tau.total() != p) {
        throw mjbd::InputError("partition does not sum to p");
    }

    struct Trial {
        std::uint64_t seed = 0;
        int p = 0;
        std::vector<int> tau_hat;
        double f = std::numeric_limits<double>::quiet_NaN();
        double phi_tail = std::numeric_limits<double>::quiet_NaN();
        bool equivalent = false;
        std::string error;
    };
    std::vector<Trial> results(trials);

    int max_threads = 1;
#ifdef _OPENMP
    max_threads = omp_get_max_threads();
#endif
    if (const char* cap = std::getenv("MJBD_THREADS")) {
        int requested = std::atoi(cap);
        if (requested >= 1) max_threads = std::min(max_threads, requested);
    }

#pragma omp parallel for schedule(dynamic) num_threads(max_threads)
    for (int t = 0; t < trials; ++t) {
        Trial& trial = results[t];
        trial.seed = seed + static_cast<std::uint64_t>(t);
        try {
            mjbd::PlantedInstance inst =
                isa ? mjbd::gen_isa_covariances(tau, n, m, samples, trial.seed)
                    : mjbd::gen_example1(m, n, p, tau, snr, trial.seed);
            mjbd::SolveOptions opts = make_solve_options(xi, delta_spec, trial.seed, std::nullopt);
            mjbd::SolveResult res = mjbd::solve_bjbdp(inst.observed, opts);
            trial.p = res.solution.rank;
            trial.tau_hat = res.solution.partition.parts();
            trial.f = res.solution.residual;
            trial.phi_tail = res.solution.rank < inst.observed.d()
                                 ? res.profile.singular_values(res.solution.rank)
                                 : 0.0;
            trial.equivalent =
                mjbd::partitions_equivalent(inst.partition, res.solution.partition).equivalent;
        } catch (const std::exception& err) {
            trial.error = err.what();
        }
    }

    auto median = [](std::vector<double> values) {
        if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
        std::sort(values.begin(), values.end());
        std::size_t n = values.size();
        return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    };

    std::vector<double> fs, tails;
    int successes = 0;
    json per_trial = json::array();
    for (const Trial& trial : results) {  // deterministic aggregation order
        json row;
        row["seed"] = trial.seed;
        if (trial.error.empty()) {
            row["p"] = trial.p;
            row["tau_hat"] = trial.tau_hat;
            row["f_A"] = trial.f;
            row["phi_tail"] = trial.phi_tail;
            row["equivalent"] = trial.equivalent;
            fs.push_back(trial.f);
            tails.push_back(trial.phi_tail);
            if (trial.equivalent) ++successes;
        } else {
            row["error"] = trial.error;
        }
        per_trial.push_back(row);
    }

    json report;
    report["report_version"] = 1;
    report["trials"] = trials;
    report["snr"] = finite_or_string(snr);
    report["success_rate"] = static_cast<double>(successes) / trials;
    report["median_f"] = finite_or_string(median(fs));
    report["median_phi_tail"] = finite_or_string(median(tails));
    report["per_trial"] = per_trial;
    emit(report, out_report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"blind joint block diagonalization toolkit"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic instance");
    int s_m = 10, s_n = 15, s_p = 12, s_samples = 6000;
    std::string s_tau = "2,3,3,4", s_snr = "inf", s_out;
    std::uint64_t s_seed = 1;
    bool s_isa = false;
    synth->add_option("--m", s_m, "number of matrices / domains");
    synth->add_option("--n", s_n, "ambient dimension d");
    synth->add_option("--p", s_p, "planted rank");
    synth->add_option("--tau", s_tau, "partition, e.g. 2,3,3,4");
    synth->add_option("--snr", s_snr, "SNR in dB, or 'inf'");
    synth->add_option("--seed", s_seed, "random seed");
    synth->add_flag("--isa", s_isa, "piecewise-stationary ISA covariances instead");
    synth->add_option("--samples", s_samples, "samples per domain (ISA)");
    synth->add_option("--out", s_out, "output file")->required();

    // decompose
    auto* dec = app.add_subcommand("decompose", "solve the decomposition");
    std::string d_in, d_delta = "auto", d_report, d_outA;
    double d_xi = 0.1;
    std::uint64_t d_seed = 0;
    int d_rank = 0;
    dec->add_option("--in", d_in, "input matrix-set file")->required();
    dec->add_option("--xi", d_xi, "rank-gap parameter in (0,1)");
    dec->add_option("--delta", d_delta, "null-space threshold: 'auto' or a number");
    dec->add_option("--seed", d_seed, "random seed");
    dec->add_option("--rank", d_rank, "skip rank detection and use this p");
    dec->add_option("--out-report", d_report, "write the JSON report here (default stdout)");
    dec->add_option("--out-A", d_outA, "write the diagonalizer here");

    // diagnose
    auto* diag = app.add_subcommand("diagnose", "uniqueness / identifiability report");
    std::string g_in, g_truth, g_constants, g_delta = "auto", g_report;
    double g_xi = 0.1, g_tol = 0.0;
    std::uint64_t g_seed = 0;
    diag->add_option("--in", g_in, "input matrix-set file")->required();
    diag->add_option("--truth", g_truth, "instance path whose .truth.json/.A sidecars to use");
    diag->add_option("--constants", g_constants, "bound constants, e.g. C=1,kappa=1");
    diag->add_option("--xi", g_xi, "rank-gap parameter");
    diag->add_option("--delta", g_delta, "null-space threshold");
    diag->add_option("--seed", g_seed, "random seed");
    diag->add_option("--tol", g_tol,
                     "comparison tolerance for block_error (default: noise-scaled)");
    diag->add_option("--out-report", g_report, "write the JSON report here (default stdout)");

    // spectrum
    auto* spec = app.add_subcommand("spectrum", "singular values of the stacked set");
    std::string p_in, p_format = "csv";
    int p_count = 6;
    spec->add_option("--in", p_in, "input matrix-set file")->required();
    spec->add_option("--count", p_count, "how many values from each end");
    spec->add_option("--format", p_format, "csv or json");

    // mc
    auto* mc = app.add_subcommand("mc", "Monte-Carlo batch of synth+decompose trials");
    int c_m = 10, c_n = 15, c_p = 12, c_samples = 6000, c_trials = 20;
    std::string c_tau = "2,3,3,4", c_snr = "40", c_delta = "auto", c_report;
    std::uint64_t c_seed = 1;
    double c_xi = 0.1;
    bool c_isa = false;
    mc->add_option("--m", c_m, "number of matrices / domains");
    mc->add_option("--n", c_n, "ambient dimension d");
    mc->add_option("--p", c_p, "planted rank");
    mc->add_option("--tau", c_tau, "partition");
    mc->add_option("--snr", c_snr, "SNR in dB, or 'inf'");
    mc->add_option("--seed", c_seed, "base seed; trial i uses seed+i");
    mc->add_option("--trials", c_trials, "number of trials");
    mc->add_flag("--isa", c_isa, "ISA generator instead");
    mc->add_option("--samples", c_samples, "samples per domain (ISA)");
    mc->add_option("--xi", c_xi, "rank-gap parameter");
    mc->add_option("--delta", c_delta, "null-space threshold");
    mc->add_option("--out-report", c_report, "write the JSON report here (default stdout)");

    try {
        app.parse(argc, argv);
        if (*synth) {
            return cmd_synth(s_out, s_m, s_n, s_p, s_tau, s_snr, s_seed, s_isa, s_samples);
        }
        if (*dec) {
            return cmd_decompose(d_in, d_xi, d_delta, d_seed,
                                 d_rank > 0 ? std::optional<int>(d_rank) : std::nullopt,
                                 d_report, d_outA);
        }
        if (*diag) {
            return cmd_diagnose(g_in, g_truth, g_constants, g_xi, g_delta, g_seed, g_tol,
                                g_report);
        }
        if (*spec) {
            return cmd_spectrum(p_in, p_count, p_format);
        }
        if (*mc) {
            return cmd_mc(c_m, c_n, c_p, c_tau, c_snr, c_seed, c_trials, c_isa, c_samples, c_xi,
                          c_delta, c_report);
        }
    } catch (const CLI::ParseError& err) {
        int code = app.exit(err);
        return code == 0 ? 0 : kExitInput;
    } catch (const mjbd::RankUndetectableError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitRank;
    } catch (const mjbd::InputError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitInput;
    } catch (const mjbd::Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitNumerical;
    }
    return 0;
}
