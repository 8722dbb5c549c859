#pragma once

#include <array>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cvverify {

using BigInt = boost::multiprecision::cpp_int;
using BigFloat = boost::multiprecision::cpp_bin_float_50;

/// c0 = 1 - 1/sqrt(2); the dimension-test threshold rate is e^{-c0^2 d0}.
double c0_constant();
BigFloat c0_squared();

/// Left side of the d0 feasibility inequality
/// 10 k e^{-c0^2 d0} (264 k^2 m^2 d0^2 ln(4/eps)/eps^2 + m) <= eps.
BigFloat d0_requirement_lhs(int k, std::int64_t m, double epsilon, int d0);

/// Minimal integer d0 satisfying the requirement; d0 - 1 violates it.
int choose_d0(int k, std::int64_t m, double epsilon);

/// L = ceil(264 k^2 m^2 d0^2 ln(4/eps)/eps^2 + m), exact in extended precision.
BigInt compute_L(int k, std::int64_t m, double epsilon, int d0);

/// R = floor(N e^{-c0^2 d0}).
BigInt compute_R(const BigInt& N, int d0);

/// Smallest even N strictly above (50/64) ln(4k/eps) e^{2 c0^2 d0} that also
/// satisfies the stricter counting requirement R^2 >= 50 (N+2) ln(4k/eps).
BigInt choose_N(int k, double epsilon, int d0);

/// (k/2+1) N for the minimal-feasible (d0, N); the headline register count.
BigInt sample_complexity(int k, std::int64_t m, double epsilon);

struct VerificationPlan {
  int k = 1;
  std::int64_t m = 1;
  double epsilon = 0.1;
  int d0 = 1;
  BigInt N, K, R, L, Q, total_registers;
  std::vector<std::string> flags;

  bool theorem_regime() const { return flags.empty(); }
};

/// Assembles a plan from explicit (k, m, eps, d0, N[, L]) and computes the
/// derived quantities plus regime flags. L defaults to the ceiling formula.
VerificationPlan assemble_plan(int k, std::int64_t m, double epsilon, int d0,
                               const BigInt& N,
                               const std::optional<BigInt>& L_override = std::nullopt);

/// Full planner: chooses the smallest d0 >= choose_d0 whose assembled plan
/// has a soundness budget within 3 eps, with N from choose_N.
VerificationPlan make_plan(int k, std::int64_t m, double epsilon);

struct BoundReport {
  std::array<double, 4> soundness_terms{};
  double soundness_total = 0.0;
  std::array<double, 2> completeness_terms{};
  double completeness_deficit = 0.0;
  std::vector<std::string> flags;
};

/// Four-term soundness budget; requires N > 15 k R.
BoundReport soundness_bound(const VerificationPlan& plan);

/// Two-term completeness deficit; vacuous regimes are flagged, not errors.
BoundReport completeness_bound(const VerificationPlan& plan);

/// p = erfc(sqrt(d0/2)): vacuum weight outside the dimension-test window.
double vacuum_tail(int d0);
/// log of the same, valid far beyond double underflow.
double log_vacuum_tail(int d0);

/// Natural-log binary relative entropy D(a||p); endpoints via limits.
double binary_relative_entropy(double a, double p);

struct ConcentrationResult {
  double value = 0.0;
  double raw = 0.0;
  bool clamped = false;
};

/// Tail bounds used by the analysis; probability bounds are clamped to
/// [0, 1] with the clamp flagged in `clamped`.
ConcentrationResult serfling_upper(std::int64_t sample_k, std::int64_t complement_n,
                                   double delta);
ConcentrationResult serfling_lower(std::int64_t sample_k, std::int64_t complement_n,
                                   double delta);
ConcentrationResult lemma1_bound(std::int64_t k_prime, std::int64_t n, std::int64_t r,
                                 std::int64_t q);
ConcentrationResult definetti_bound(int k, const BigInt& Q, const BigInt& L,
                                    const BigInt& N, int d0);
ConcentrationResult gamma_bound(double delta, int d0);
ConcentrationResult hoeffding_unbounded(const BigInt& L, std::int64_t m, int k,
                                        double epsilon, double chi4);

/// Desk-scale runtime plan with narrow integers, used by the protocol
/// engine. Theorem-scale plans refuse to narrow.
struct RunPlan {
  int k = 1;
  std::int64_t m = 1;
  double epsilon = 0.1;
  int d0 = 1;
  std::int64_t N = 0;
  std::int64_t K = 0;
  std::int64_t R = 0;
  std::int64_t Q = 0;
  std::int64_t L = 0;
  std::int64_t total_registers = 0;
  std::vector<std::string> flags;
};

RunPlan to_run_plan(const VerificationPlan& plan);
/// Desk plan with explicit overrides; out-of-regime settings are flagged and
/// the run proceeds.
RunPlan desk_plan(int k, std::int64_t m, double epsilon, int d0, std::int64_t N,
                  std::int64_t L);

}  // namespace cvverify
