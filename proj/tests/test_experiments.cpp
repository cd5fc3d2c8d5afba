#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "quditlearn/experiments.hpp"
#include "test_helpers.hpp"

using namespace quditlearn;
using quditlearn::testing::max_abs_diff;

TEST_CASE("protocol names round-trip", "[experiments]") {
    for (ProtocolKind p : {ProtocolKind::conjugate_bell, ProtocolKind::single_copy_shadow,
                           ProtocolKind::single_copy_with_conjugate})
        REQUIRE(protocol_from_name(protocol_name(p)) == p);
    REQUIRE_THROWS_AS(protocol_from_name("bogus"), std::invalid_argument);
}

TEST_CASE("spiked-state Bell distribution closed forms", "[experiments]") {
    SECTION("odd d: P(a,b) = (1 - eps^2 sin(2 pi (a p - b q)/d)) / d^2") {
        const Dimension dim(5);
        const DisplacementIndex spike(1, 2, dim);
        const double eps = 0.6;
        for (int r : {1, -1}) {
            const DensityMatrix rho = make_test_state(dim, StateSpec::spike(spike, r, eps), 0);
            const auto dist = bell_distribution(rho, rho.conjugate());
            for (int a = 0; a < 5; ++a)
                for (int b = 0; b < 5; ++b) {
                    const int t = mod_d(static_cast<long long>(a) * spike.p -
                                            static_cast<long long>(b) * spike.q,
                                        5);
                    const double expected =
                        (1.0 - eps * eps * std::sin(2.0 * kPi * t / 5.0)) / 25.0;
                    REQUIRE(std::abs(dist.probs[a * 5 + b] - expected) < 1e-12);
                }
        }
    }

    SECTION("d=2: P(a,b) = (1 + eps^2 (-1)^{a p - b q}) / 4") {
        const Dimension dim(2);
        const DisplacementIndex spike(1, 1, dim);
        const double eps = 0.5;
        const DensityMatrix rho = make_test_state(dim, StateSpec::spike(spike, 1, eps), 0);
        const auto dist = bell_distribution(rho, rho.conjugate());
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                const double sign = (a - b) % 2 == 0 ? 1.0 : -1.0;
                REQUIRE(std::abs(dist.probs[a * 2 + b] - (1.0 + eps * eps * sign) / 4.0) <
                        1e-12);
            }
    }
}

TEST_CASE("conjugate spike bookkeeping", "[experiments]") {
    for (int d : {2, 3, 5, 7}) {
        const Dimension dim(d);
        for (int q = 0; q < d; ++q)
            for (int p = 0; p < d; ++p) {
                if (q == 0 && p == 0) continue;
                const SpikeState s{DisplacementIndex(q, p, dim), 0.31};
                const SpikeState cs = conjugate_spike(dim, s);
                // E at the conjugate spike times its sign must equal E_{q,p}^*.
                const Mat lhs = (cs.amp / s.amp) * displacement_observable(dim, cs.spike);
                const Mat rhs = displacement_observable(dim, DisplacementIndex(q, p, dim))
                                    .conjugate();
                REQUIRE(max_abs_diff(lhs, rhs) < 1e-12);
            }
    }
}

TEST_CASE("distinguishing trial basics", "[experiments]") {
    const Dimension dim(3);

    SECTION("epsilon domain is validated") {
        REQUIRE_THROWS_AS(
            distinguishing_trial(dim, 0.0, ProtocolKind::conjugate_bell, 10, 1),
            std::invalid_argument);
        REQUIRE_THROWS_AS(
            distinguishing_trial(dim, 1.0, ProtocolKind::conjugate_bell, 10, 1),
            std::invalid_argument);
    }

    SECTION("zero samples defaults to NO") {
        for (ProtocolKind p : {ProtocolKind::conjugate_bell, ProtocolKind::single_copy_shadow,
                               ProtocolKind::single_copy_with_conjugate})
            for (std::uint64_t seed = 0; seed < 6; ++seed) {
                const auto rec = distinguishing_trial(dim, 0.5, p, 0, seed);
                REQUIRE_FALSE(rec.decision_yes);
            }
    }

    SECTION("records echo the configuration and are reproducible") {
        ExperimentContext ctx(dim);
        for (ProtocolKind p : {ProtocolKind::conjugate_bell, ProtocolKind::single_copy_shadow,
                               ProtocolKind::single_copy_with_conjugate}) {
            const auto a = distinguishing_trial(dim, 0.4, p, 500, 99, &ctx);
            const auto b = distinguishing_trial(dim, 0.4, p, 500, 99);  // fresh caches
            REQUIRE(a.d == 3);
            REQUIRE(a.epsilon == 0.4);
            REQUIRE(a.protocol == p);
            REQUIRE(a.n_samples == 500);
            REQUIRE(a.seed == 99);
            REQUIRE(a.decision_yes == b.decision_yes);
            REQUIRE(a.truth_yes == b.truth_yes);
        }
    }
}

TEST_CASE("conjugate_bell protocol accuracy", "[experiments]") {
    const Dimension dim(5);
    const double eps = 0.5;

    SECTION("NO states are declared NO with frequency >= 0.95") {
        int no_trials = 0, no_correct = 0;
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            const auto rec =
                distinguishing_trial(dim, eps, ProtocolKind::conjugate_bell, 10000, 1000 + seed);
            if (!rec.truth_yes) {
                ++no_trials;
                no_correct += rec.decision_yes ? 0 : 1;
            }
        }
        REQUIRE(no_trials > 50);
        REQUIRE(no_correct >= static_cast<int>(0.95 * no_trials));
    }

    SECTION("YES states succeed at the theory sample count") {
        const long long n =
            static_cast<long long>(std::ceil(64.0 * std::log(4.0 * 25.0) / std::pow(eps, 4)));
        REQUIRE(n == 4716);
        int yes_trials = 0, yes_correct = 0, correct = 0;
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            const auto rec =
                distinguishing_trial(dim, eps, ProtocolKind::conjugate_bell, n, 5000 + seed);
            correct += rec.decision_yes == rec.truth_yes ? 1 : 0;
            if (rec.truth_yes) {
                ++yes_trials;
                yes_correct += rec.decision_yes ? 1 : 0;
            }
        }
        REQUIRE(yes_trials > 50);
        REQUIRE(yes_correct >= static_cast<int>(0.9 * yes_trials));
        REQUIRE(correct >= 180);
    }
}

TEST_CASE("fast shadow path agrees with the generic estimator", "[experiments]") {
    const Dimension dim(3);
    ExperimentContext ctx(dim);
    const SpikeState state{DisplacementIndex(1, 2, dim), 0.5};

    SECTION("per-element outcome distributions match the rotated state") {
        const DensityMatrix rho =
            make_test_state(dim, StateSpec::spike(state.spike, 1, state.amp), 0);
        Rng rng(7);
        for (int t = 0; t < 30; ++t) {
            const SymplecticMat2 c = sample_symplectic(dim, rng);
            const DisplacementIndex offset(static_cast<long long>(rng.uniform_int(3)),
                                           static_cast<long long>(rng.uniform_int(3)), dim);
            const auto probs = detail::line_probabilities(dim, state, ctx.line(c), offset);
            const Mat u = synthesize_clifford(CliffordElement{dim, c, offset});
            const Mat rotated = u * rho.matrix() * u.adjoint();
            for (int b = 0; b < 3; ++b)
                REQUIRE(std::abs(probs[b] - std::real(rotated(b, b))) < 1e-12);
        }
    }

    SECTION("recorded samples reproduce the estimates through the slow path") {
        Rng rng(11);
        const auto fast = shadow_protocol_estimates(dim, state, 1500, rng, ctx, true);
        REQUIRE(fast.samples.size() == 1500);
        for (int q = 0; q < 3; ++q)
            for (int p = 0; p < 3; ++p) {
                if (q == 0 && p == 0) continue;
                const auto slow = estimate_expectation(
                    fast.samples, displacement_observable(dim, q, p));
                REQUIRE(std::abs(slow.mean.imag()) < 1e-9);
                REQUIRE(std::abs(fast.estimate[q * 3 + p] - slow.mean.real()) < 1e-9);
            }
    }

    SECTION("estimates concentrate on the spike amplitude") {
        Rng rng(13);
        const auto res = shadow_protocol_estimates(dim, state, 20000, rng, ctx);
        const double noise = 5.0 * std::sqrt(8.0 / 20000.0);
        for (int q = 0; q < 3; ++q)
            for (int p = 0; p < 3; ++p) {
                if (q == 0 && p == 0) continue;
                const double target = (q == 1 && p == 2) ? state.amp : 0.0;
                REQUIRE(std::abs(res.estimate[q * 3 + p] - target) < noise);
            }
    }

    SECTION("mixed states yield null estimates") {
        Rng rng(17);
        const auto res = shadow_protocol_estimates(dim, SpikeState{}, 20000, rng, ctx);
        for (std::size_t i = 1; i < res.estimate.size(); ++i)
            REQUIRE(std::abs(res.estimate[i]) < 5.0 * std::sqrt(8.0 / 20000.0));
    }
}

TEST_CASE("single-copy protocols reach high accuracy with enough samples",
          "[experiments]") {
    const Dimension dim(3);
    ExperimentContext ctx(dim);
    for (ProtocolKind p :
         {ProtocolKind::single_copy_shadow, ProtocolKind::single_copy_with_conjugate}) {
        int correct = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            const auto rec = distinguishing_trial(dim, 0.5, p, 2000, 300 + seed, &ctx);
            correct += rec.decision_yes == rec.truth_yes ? 1 : 0;
        }
        REQUIRE(correct >= 90);
    }
}

TEST_CASE("scaling scan", "[experiments]") {
    SECTION("single cell produces exactly one row") {
        const auto report =
            scaling_scan({3}, 0.5, {ProtocolKind::conjugate_bell}, 1, 42);
        REQUIRE(report.rows.size() == 1);
        REQUIRE(report.rows[0].d == 3);
        REQUIRE(report.rows[0].protocol == ProtocolKind::conjugate_bell);
        REQUIRE(report.rows[0].samples_to_success > 0);
    }

    SECTION("results are worker-count independent and seed-deterministic") {
        const std::vector<ProtocolKind> protos{ProtocolKind::conjugate_bell,
                                               ProtocolKind::single_copy_shadow};
        const auto a = scaling_scan({3}, 0.5, protos, 12, 7, 1);
        const auto b = scaling_scan({3}, 0.5, protos, 12, 7, 4);
        REQUIRE(a.rows.size() == b.rows.size());
        for (std::size_t i = 0; i < a.rows.size(); ++i)
            REQUIRE(a.rows[i].samples_to_success == b.rows[i].samples_to_success);
    }

    SECTION("shadow sample demand does not shrink with d") {
        const auto report =
            scaling_scan({3, 7}, 0.5, {ProtocolKind::single_copy_shadow}, 40, 11);
        REQUIRE(report.rows.size() == 2);
        REQUIRE(report.rows[0].samples_to_success > 0);
        REQUIRE(report.rows[1].samples_to_success >= report.rows[0].samples_to_success);
    }

    SECTION("domain validation") {
        REQUIRE_THROWS_AS(scaling_scan({3}, 1.5, {ProtocolKind::conjugate_bell}, 5, 1),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(scaling_scan({3}, 0.5, {ProtocolKind::conjugate_bell}, 0, 1),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(scaling_scan({4}, 0.5, {ProtocolKind::conjugate_bell}, 5, 1),
                          std::invalid_argument);
    }
}

TEST_CASE("norm lemma: displacement tensor sums are scaled permutations",
          "[experiments]") {
    SECTION("frozen cases") {
        const auto a = norm_lemma_check(Dimension(3), 1, 2);
        REQUIRE(std::abs(a.op_norm - 3.0) < 1e-9);
        REQUIRE(a.is_permutation);
        const auto b = norm_lemma_check(Dimension(5), 2, 2);
        REQUIRE(std::abs(b.op_norm - 5.0) < 1e-9);
        REQUIRE(b.is_permutation);
        const auto c = norm_lemma_check(Dimension(3), 2, 4);
        REQUIRE(std::abs(c.op_norm - 3.0) < 1e-9);
        REQUIRE(c.is_permutation);
    }

    SECTION("all m at d=3, k=4") {
        for (int m = 1; m <= 4; ++m) {
            const auto r = norm_lemma_check(Dimension(3), m, 4);
            REQUIRE(std::abs(r.op_norm - 3.0) < 1e-9);
            REQUIRE(r.is_permutation);
        }
    }

    SECTION("a d=5, k=4 spot check") {
        const auto r = norm_lemma_check(Dimension(5), 3, 4);
        REQUIRE(std::abs(r.op_norm - 5.0) < 1e-9);
        REQUIRE(r.is_permutation);
    }

    SECTION("domain validation") {
        REQUIRE_THROWS_AS(norm_lemma_check(Dimension(3), 1, 3), std::invalid_argument);
        REQUIRE_THROWS_AS(norm_lemma_check(Dimension(3), 0, 2), std::invalid_argument);
        REQUIRE_THROWS_AS(norm_lemma_check(Dimension(3), 5, 4), std::invalid_argument);
        REQUIRE_THROWS_AS(norm_lemma_check(Dimension(2), 1, 2), std::invalid_argument);
        REQUIRE_THROWS_AS(norm_lemma_check(Dimension(11), 1, 4), std::invalid_argument);
    }
}

TEST_CASE("norm lemma: observable tensor sums respect the proved bound",
          "[experiments]") {
    const auto a = e_norm_check(Dimension(3), 2);
    REQUIRE(a.op_norm <= 2.0 * 3.0 + 1e-8);
    REQUIRE(a.within_conjectured_2d);
    const auto b = e_norm_check(Dimension(5), 2);
    REQUIRE(b.op_norm <= 2.0 * 5.0 + 1e-8);
    REQUIRE(b.within_conjectured_2d);
    const auto c = e_norm_check(Dimension(3), 4);
    REQUIRE(c.op_norm <= 4.0 * 3.0 + 1e-8);
    REQUIRE(c.within_conjectured_2d == (c.op_norm <= 6.0 + 1e-8));

    REQUIRE_THROWS_AS(e_norm_check(Dimension(3), 3), std::invalid_argument);
    REQUIRE_THROWS_AS(e_norm_check(Dimension(2), 2), std::invalid_argument);
    REQUIRE_THROWS_AS(e_norm_check(Dimension(13), 4), std::invalid_argument);
}

TEST_CASE("conjugate-pair tensor family commutes", "[experiments]") {
    REQUIRE(tensor_commutation_check(Dimension(2)) < 1e-12);
    REQUIRE(tensor_commutation_check(Dimension(3)) < 1e-10);
    REQUIRE(tensor_commutation_check(Dimension(5)) < 1e-10);
    REQUIRE_THROWS_AS(tensor_commutation_check(Dimension(17)), std::invalid_argument);

    // Bare displacements do not commute; the tensor pairing is essential.
    const Dimension dim(3);
    const Mat x = displacement(dim, 1, 0);
    const Mat z = displacement(dim, 0, 1);
    const double norm = (x * z - z * x).norm();
    REQUIRE(norm >= std::abs(root_of_unity(1, 3) - cplx(1.0)) * std::sqrt(3.0) - 1e-9);
}
