// qudit-learn: seeded, configuration-driven driver for the verification suites
// and experiments. Results are emitted as CSV or JSON tables (schema version in
// quditlearn/io.hpp); wall-clock timing goes to stderr so output files stay
// byte-deterministic for a fixed (config, seed).
//
// Exit codes: 0 all checks passed, 1 at least one check failed (the result
// file is still written), 2 invalid configuration or usage.

#include <chrono>
#include <cstdint>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "quditlearn/experiments.hpp"
#include "quditlearn/io.hpp"
#include "quditlearn/learner.hpp"
#include "quditlearn/parallel.hpp"
#include "quditlearn/shadows.hpp"
#include "quditlearn/verify.hpp"

namespace ql = quditlearn;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

const char* bool_cell(bool b) { return b ? "true" : "false"; }

// State grammar: "mixed" | "haar" | "spike:q,p:+[:amp]" | "spike:q,p:-[:amp]".
// The spike amplitude defaults to 0.6 (safely inside the valid-state range and
// above the default detection thresholds).
ql::DensityMatrix parse_state(const std::string& text, ql::Dimension dim, std::uint64_t seed) {
    if (text == "mixed") return ql::make_test_state(dim, ql::StateSpec::mixed(), seed);
    if (text == "haar") return ql::make_test_state(dim, ql::StateSpec::haar(), seed);
    const auto parts = split(text, ':');
    if (parts.size() >= 3 && parts[0] == "spike") {
        const auto qp = split(parts[1], ',');
        if (qp.size() != 2) throw std::invalid_argument("state: spike needs q,p indices");
        const int q = std::stoi(qp[0]);
        const int p = std::stoi(qp[1]);
        if (parts[2] != "+" && parts[2] != "-")
            throw std::invalid_argument("state: spike sign must be + or -");
        const int sign = parts[2] == "+" ? 1 : -1;
        const double amp = parts.size() > 3 ? std::stod(parts[3]) : 0.6;
        return ql::make_test_state(
            dim, ql::StateSpec::spike(ql::DisplacementIndex(q, p, dim), sign, amp), seed);
    }
    throw std::invalid_argument("state: expected mixed | haar | spike:q,p:+|-[:amp], got '" +
                                text + "'");
}

std::uint64_t state_seed(const ql::RunConfig& cfg) {
    return ql::Rng(cfg.seed).substream(0x5eed).next_u64();
}

// verify: the named invariant suite at d in {2, 3, 5, 7}.
ql::ResultEnvelope run_verify(const ql::RunConfig& cfg) {
    ql::ResultEnvelope env;
    env.table.columns = {"d", "check", "max_deviation", "tolerance", "passed"};
    env.all_pass = true;
    for (int d : {2, 3, 5, 7}) {
        for (const auto& r : ql::run_invariant_suite(ql::Dimension(d), cfg.seed)) {
            env.table.rows.push_back({std::to_string(d), r.name,
                                      ql::format_double(r.max_deviation),
                                      ql::format_double(r.tolerance), bool_cell(r.passed)});
            env.all_pass = env.all_pass && r.passed;
        }
    }
    return env;
}

// learn: amplitude learning on the configured state; per-index error vs exact.
ql::ResultEnvelope run_learn(const ql::RunConfig& cfg) {
    const ql::Dimension dim(cfg.d);
    const ql::DensityMatrix rho = parse_state(cfg.state, dim, state_seed(cfg));
    ql::LearnerConfig lc;
    lc.epsilon = cfg.epsilon;
    lc.delta = cfg.delta;
    const ql::LearnResult result = ql::learn_amplitudes(rho, lc, cfg.seed);
    const ql::AmplitudeTable exact = ql::amplitudes(rho, dim);

    ql::ResultEnvelope env;
    env.table.columns = {"d", "q", "p", "y_true", "y_hat", "abs_error", "tracked"};
    env.all_pass = true;
    for (int q = 0; q < dim.d; ++q)
        for (int p = 0; p < dim.d; ++p) {
            if (q == 0 && p == 0) continue;
            const std::size_t flat = static_cast<std::size_t>(q) * dim.d + p;
            const ql::cplx y = exact.values[flat];
            const ql::cplx y_hat = result.signs.y_hat[flat];
            const double err = std::abs(y_hat - y);
            env.table.rows.push_back(
                {std::to_string(cfg.d), std::to_string(q), std::to_string(p),
                 ql::format_complex(y), ql::format_complex(y_hat), ql::format_double(err),
                 bool_cell(result.magnitudes.tracked[flat] != 0)});
            env.all_pass = env.all_pass && err <= cfg.epsilon;
        }
    return env;
}

// shadows: classical-shadow estimates of every displacement observable with
// exact values and the variance oracle alongside; trials = shadow samples.
ql::ResultEnvelope run_shadows(const ql::RunConfig& cfg) {
    const ql::Dimension dim(cfg.d);
    const ql::DensityMatrix rho = parse_state(cfg.state, dim, state_seed(cfg));
    const std::size_t n = static_cast<std::size_t>(cfg.trials);
    const auto samples = ql::shadow_sample(rho, n, cfg.seed);

    ql::ResultEnvelope env;
    env.table.columns = {"d",         "q",          "p",
                         "estimate",  "exact",      "std_error",
                         "var_oracle", "samples",   "passed"};
    env.all_pass = true;
    for (int q = 0; q < dim.d; ++q)
        for (int p = 0; p < dim.d; ++p) {
            if (q == 0 && p == 0) continue;
            const ql::Mat obs = ql::displacement_observable(dim, q, p);
            const auto est = ql::estimate_expectation(samples, obs);
            const ql::cplx exact = (obs * rho.matrix()).trace();
            const double var = ql::variance_oracle(obs, rho);
            const double band = 5.0 * std::sqrt(var / static_cast<double>(n));
            const bool ok = std::abs(est.mean - exact) <= band;
            env.table.rows.push_back(
                {std::to_string(cfg.d), std::to_string(q), std::to_string(p),
                 ql::format_complex(est.mean), ql::format_complex(exact),
                 ql::format_double(est.stderr_), ql::format_double(var), std::to_string(n),
                 bool_cell(ok)});
            env.all_pass = env.all_pass && ok;
        }
    return env;
}

// scaling: sample-complexity frontier per (d, protocol).
ql::ResultEnvelope run_scaling(const ql::RunConfig& cfg, int workers) {
    std::vector<int> dims;
    for (const auto& tok : split(cfg.dlist, ',')) dims.push_back(std::stoi(tok));
    if (dims.empty()) throw std::invalid_argument("scaling: --dlist is empty");
    std::vector<ql::ProtocolKind> protos;
    for (const auto& tok : split(cfg.protocols, ','))
        protos.push_back(ql::protocol_from_name(tok));
    if (protos.empty()) throw std::invalid_argument("scaling: --protocols is empty");

    const ql::ScalingReport report = ql::scaling_scan(
        dims, cfg.epsilon, protos, static_cast<int>(cfg.trials), cfg.seed, workers);

    ql::ResultEnvelope env;
    env.table = ql::table_from_scaling(report);
    env.all_pass = true;
    for (const auto& row : report.rows) env.all_pass = env.all_pass && row.samples_to_success > 0;
    return env;
}

// twirl: k-fold Clifford twirl vs the analytic fixed-space projector.
ql::ResultEnvelope run_twirl(const ql::RunConfig& cfg) {
    const ql::Dimension dim(cfg.d);
    const ql::SuperOperatorMatrix channel = ql::twirl_channel(cfg.k, dim);
    const ql::SuperOperatorMatrix theory = ql::twirl_theory(cfg.k, dim);
    const double dev = (channel.entries - theory.entries).cwiseAbs().maxCoeff();
    const double idem =
        (channel.entries * channel.entries - channel.entries).cwiseAbs().maxCoeff();
    const bool ok = dev <= 1e-9 && idem <= 1e-8;

    ql::ResultEnvelope env;
    env.table.columns = {"k", "d", "channel_vs_theory", "idempotency", "passed"};
    env.table.rows.push_back({std::to_string(cfg.k), std::to_string(cfg.d),
                              ql::format_double(dev), ql::format_double(idem), bool_cell(ok)});
    env.all_pass = ok;
    return env;
}

// norms: operator-norm lemmas for displacement/observable tensor sums plus the
// conjugate-pair commutation probe at the configured dimension.
ql::ResultEnvelope run_norms(const ql::RunConfig& cfg) {
    ql::ResultEnvelope env;
    env.table.columns = {"d", "kind", "m", "k", "value", "flag", "passed"};
    env.all_pass = true;
    const auto push = [&](const std::string& kind, int m, int k, double value,
                          bool flag, bool ok) {
        env.table.rows.push_back({std::to_string(cfg.d), kind, std::to_string(m),
                                  std::to_string(k), ql::format_double(value),
                                  bool_cell(flag), bool_cell(ok)});
        env.all_pass = env.all_pass && ok;
    };

    const ql::Dimension dim(cfg.d);
    if (cfg.d % 2 == 1) {
        for (int k : {2, 4}) {
            double size = 1.0;
            for (int t = 0; t < k; ++t) size *= cfg.d;
            if (size > ql::kMaxTensorDim) continue;
            for (int m = 1; m <= k; ++m) {
                const auto r = ql::norm_lemma_check(dim, m, k);
                push("displacement_sum", m, k, r.op_norm, r.is_permutation,
                     r.is_permutation && std::abs(r.op_norm - cfg.d) <= 1e-9);
            }
            const auto e = ql::e_norm_check(dim, k);
            push("observable_sum", 0, k, e.op_norm, e.within_conjectured_2d, true);
        }
    }
    const double comm = ql::tensor_commutation_check(dim);
    push("tensor_commutation", 0, 2, comm, comm <= 1e-10, comm <= 1e-10);
    return env;
}

}  // namespace

int main(int argc, char** argv) {
    ql::RunConfig cfg;

    CLI::App app{
        "qudit-learn: simulator and verifier for qudit amplitude learning with "
        "conjugate states, generalized Clifford shadows, and scaling experiments"};
    app.add_option("command", cfg.command,
                   "one of: verify | learn | shadows | scaling | twirl | norms")
        ->required();
    app.add_option("--d", cfg.d, "prime system dimension")->capture_default_str();
    app.add_option("--eps", cfg.epsilon, "accuracy parameter in (0,1)")->capture_default_str();
    app.add_option("--delta", cfg.delta, "failure probability in (0,1)")
        ->capture_default_str();
    app.add_option("--seed", cfg.seed, "root RNG seed")->capture_default_str();
    app.add_option("--trials", cfg.trials,
                   "per-command sample/trial budget (scaling: trials per grid point; "
                   "shadows: shadow samples)")
        ->capture_default_str();
    app.add_option("--out", cfg.output_path, "result file path (omit for stdout only)");
    app.add_option("--format", cfg.format, "csv | json")->capture_default_str();
    app.add_option("--workers", cfg.workers, "worker threads (0 = auto)")
        ->envname("QUDIT_LEARN_WORKERS")
        ->capture_default_str();
    app.add_option("--state", cfg.state,
                   "input state: mixed | haar | spike:q,p:+|-[:amp]")
        ->capture_default_str();
    app.add_option("--k", cfg.k, "tensor power for the twirl command")->capture_default_str();
    app.add_option("--dlist", cfg.dlist, "comma-separated dimensions for scaling")
        ->capture_default_str();
    app.add_option("--protocols", cfg.protocols,
                   "comma-separated protocols for scaling: conjugate_bell | "
                   "single_copy_shadow | single_copy_with_conjugate")
        ->capture_default_str();
    app.set_config("--config", "", "flat key=value config file; flags override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // help/version exit 0; any parse failure is usage error
    }

    try {
        ql::validate_config(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    const int workers = cfg.workers > 0 ? cfg.workers : ql::default_worker_count();

    ql::ResultEnvelope env;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (cfg.command == "verify")
            env = run_verify(cfg);
        else if (cfg.command == "learn")
            env = run_learn(cfg);
        else if (cfg.command == "shadows")
            env = run_shadows(cfg);
        else if (cfg.command == "scaling")
            env = run_scaling(cfg, workers);
        else if (cfg.command == "twirl")
            env = run_twirl(cfg);
        else
            env = run_norms(cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    env.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    env.config = cfg;
    env.content_hash = ql::content_hash_hex(cfg);

    std::cout << ql::serialize(env, cfg.format);
    std::cout << (env.all_pass ? "PASS" : "FAIL") << " " << cfg.command
              << " rows=" << env.table.rows.size() << " hash=" << env.content_hash << "\n";
    std::cerr << "[time] " << cfg.command << " " << env.wall_seconds << " s\n";

    if (!cfg.output_path.empty()) {
        try {
            ql::write_results(env, cfg.output_path, cfg.format);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        }
    }
    return env.all_pass ? 0 : 1;
}
