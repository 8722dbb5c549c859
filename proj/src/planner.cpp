#include "cvverify/planner.hpp"

#include <cmath>
#include <stdexcept>

namespace cvverify {

namespace mp = boost::multiprecision;

namespace {

BigFloat bf(const BigInt& x) { return BigFloat(x); }

BigFloat exp_minus_c02_d0(int d0) { return mp::exp(-c0_squared() * d0); }

BigFloat ln_ratio(double num, double den) {
  return mp::log(BigFloat(num) / BigFloat(den));
}

BigInt floor_to_int(const BigFloat& x) {
  return BigInt(mp::floor(x));
}

BigInt ceil_to_int(const BigFloat& x) {
  return BigInt(mp::ceil(x));
}

BigInt even_above(const BigFloat& x) {
  // smallest even integer strictly greater than x
  BigInt n = floor_to_int(x) + 1;
  if (n < 2) n = 2;
  if (n % 2 != 0) n += 1;
  return n;
}

double to_double(const BigFloat& x) { return x.convert_to<double>(); }

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

void check_common(int k, std::int64_t m, double epsilon) {
  if (k < 1) throw std::invalid_argument("planner: k must be >= 1");
  if (m < 1) throw std::invalid_argument("planner: m must be >= 1");
  if (!(epsilon > 0.0) || !(epsilon < 0.5)) {
    throw std::invalid_argument("planner: epsilon must lie in (0, 1/2)");
  }
}

/// Counting requirement behind the first soundness term:
/// R^2 >= 50 (N+2) ln(4k/eps) with R = floor(N e^{-c0^2 d0}).
bool counting_requirement_holds(const BigInt& N, int d0, const BigFloat& lnB) {
  const BigInt R = compute_R(N, d0);
  return bf(R) * bf(R) >= 50 * (bf(N) + 2) * lnB;
}

}  // namespace

double c0_constant() { return 1.0 - 1.0 / std::sqrt(2.0); }

BigFloat c0_squared() {
  static const BigFloat v = BigFloat(1.5) - mp::sqrt(BigFloat(2));
  return v;
}

BigFloat d0_requirement_lhs(int k, std::int64_t m, double epsilon, int d0) {
  check_common(k, m, epsilon);
  if (d0 < 1) throw std::invalid_argument("planner: d0 must be >= 1");
  const BigFloat ln4e = ln_ratio(4.0, epsilon);
  const BigFloat inner = BigFloat(264) * k * k * m * m * BigFloat(d0) * d0 * ln4e /
                             (BigFloat(epsilon) * epsilon) +
                         m;
  return 10 * k * exp_minus_c02_d0(d0) * inner;
}

int choose_d0(int k, std::int64_t m, double epsilon) {
  check_common(k, m, epsilon);
  for (int d0 = 1; d0 < 1000000; ++d0) {
    if (d0_requirement_lhs(k, m, epsilon, d0) <= epsilon) return d0;
  }
  throw std::runtime_error("choose_d0: no feasible d0 below 10^6");
}

BigInt compute_L(int k, std::int64_t m, double epsilon, int d0) {
  check_common(k, m, epsilon);
  if (d0 < 1) throw std::invalid_argument("planner: d0 must be >= 1");
  const BigFloat ln4e = ln_ratio(4.0, epsilon);
  const BigFloat value = BigFloat(264) * k * k * m * m * BigFloat(d0) * d0 * ln4e /
                             (BigFloat(epsilon) * epsilon) +
                         m;
  return ceil_to_int(value);
}

BigInt compute_R(const BigInt& N, int d0) {
  if (N < 0) throw std::invalid_argument("compute_R: N must be nonnegative");
  if (d0 == 0) return N;
  return floor_to_int(bf(N) * exp_minus_c02_d0(d0));
}

BigInt choose_N(int k, double epsilon, int d0) {
  if (k < 1 || d0 < 1 || !(epsilon > 0.0) || !(epsilon < 0.5)) {
    throw std::invalid_argument("choose_N: invalid parameters");
  }
  const BigFloat lnB = ln_ratio(4.0 * k, epsilon);
  const BigFloat eq4_rhs = BigFloat(50) / 64 * lnB * mp::exp(2 * c0_squared() * d0);
  const BigFloat u = exp_minus_c02_d0(d0);
  // Real-arithmetic estimate of where R^2 >= 50 (N+2) lnB starts to hold.
  const BigFloat disc = mp::sqrt(2500 * lnB * lnB + 400 * u * u * lnB);
  const BigFloat n_star = (50 * lnB + disc) / (2 * u * u);

  const BigInt start = even_above(eq4_rhs);
  if (n_star < 10000000 && eq4_rhs < 10000000) {
    for (BigInt n = start;; n += 2) {
      if (counting_requirement_holds(n, d0, lnB)) return n;
      if (n > BigInt(40000000)) {
        throw std::runtime_error("choose_N: scan failed to terminate");
      }
    }
  }
  // Large-scale path: find the smallest integer R whose stripe
  // [R/u, R^2/(50 lnB) - 2] is non-empty, then the first even N in it.
  BigInt r0 = ceil_to_int((50 * lnB + disc) / (2 * u));
  for (int guard = 0; guard < 1000000; ++guard, r0 += 1) {
    BigInt n = even_above(bf(r0) / u - 1);  // smallest even N with N >= r0/u
    if (bf(n) <= eq4_rhs) n = start;
    if (compute_R(n, d0) >= r0 && counting_requirement_holds(n, d0, lnB) &&
        bf(n) > eq4_rhs) {
      return n;
    }
  }
  throw std::runtime_error("choose_N: stripe search failed");
}

BigInt sample_complexity(int k, std::int64_t m, double epsilon) {
  const int d0 = choose_d0(k, m, epsilon);
  const BigInt N = choose_N(k, epsilon, d0);
  return (BigInt(k) + 2) * N / 2;
}

VerificationPlan assemble_plan(int k, std::int64_t m, double epsilon, int d0,
                               const BigInt& N, const std::optional<BigInt>& L_override) {
  check_common(k, m, epsilon);
  if (d0 < 1) throw std::invalid_argument("assemble_plan: d0 must be >= 1");
  if (N < 2 || N % 2 != 0) {
    throw std::invalid_argument("assemble_plan: N must be a positive even integer");
  }
  VerificationPlan plan;
  plan.k = k;
  plan.m = m;
  plan.epsilon = epsilon;
  plan.d0 = d0;
  plan.N = N;
  plan.K = BigInt(k) * N / 2;
  plan.R = compute_R(N, d0);
  plan.Q = 15 * plan.R;
  plan.L = L_override ? *L_override : compute_L(k, m, epsilon, d0);
  plan.total_registers = (BigInt(k) + 2) * N / 2;
  if (plan.L > N) {
    throw std::invalid_argument("assemble_plan: L exceeds N");
  }
  if (BigInt(m) >= plan.L) {
    throw std::invalid_argument("assemble_plan: m must be < L");
  }
  if (d0_requirement_lhs(k, m, epsilon, d0) > epsilon) {
    plan.flags.push_back("outside_theorem_regime:d0_requirement");
  }
  const BigFloat lnB = ln_ratio(4.0 * k, epsilon);
  const BigFloat eq4_rhs = BigFloat(50) / 64 * lnB * mp::exp(2 * c0_squared() * d0);
  if (!(bf(N) > eq4_rhs)) {
    plan.flags.push_back("outside_theorem_regime:N_requirement");
  }
  if (!counting_requirement_holds(N, d0, lnB)) {
    plan.flags.push_back("outside_theorem_regime:counting_requirement");
  }
  if (L_override && *L_override < compute_L(k, m, epsilon, d0)) {
    plan.flags.push_back("outside_theorem_regime:L_below_formula");
  }
  return plan;
}

VerificationPlan make_plan(int k, std::int64_t m, double epsilon) {
  int d0 = choose_d0(k, m, epsilon);
  for (int step = 0; step < 200; ++step, ++d0) {
    VerificationPlan plan = assemble_plan(k, m, epsilon, d0, choose_N(k, epsilon, d0));
    const BoundReport rep = soundness_bound(plan);
    if (rep.soundness_total <= 3.0 * epsilon) return plan;
  }
  throw std::runtime_error("make_plan: soundness budget not reached");
}

BoundReport soundness_bound(const VerificationPlan& plan) {
  BoundReport rep;
  const BigFloat N = bf(plan.N);
  const BigFloat R = bf(plan.R);
  const BigFloat L = bf(plan.L);
  const BigFloat d0 = BigFloat(plan.d0);
  const int k = plan.k;
  const BigFloat denom = N - 15 * k * R;
  if (!(denom > 0)) {
    throw std::domain_error("soundness_bound: requires N > 15 k R");
  }
  const BigFloat t1 = 4 * k * mp::exp(-R * R / (50 * (N + 2)));
  const BigFloat t2 = 15 * k * R * L / N;
  const BigFloat t3 = 2 * L * k * k * d0 * d0 / denom;
  const BigFloat lm = L - plan.m;
  BigFloat hoeffding;
  if (lm <= 0) {
    hoeffding = 4;
  } else {
    hoeffding = 4 * mp::exp(-lm * BigFloat(plan.epsilon) * plan.epsilon /
                            (264 * BigFloat(plan.m) * plan.m * k * k * d0 * d0));
  }
  const BigFloat t4 = hoeffding > plan.epsilon ? hoeffding : BigFloat(plan.epsilon);
  rep.soundness_terms = {to_double(t1), to_double(t2), to_double(t3), to_double(t4)};
  rep.soundness_total = to_double(t1 + t2 + t3 + t4);
  if (rep.soundness_total >= 1.0) rep.flags.push_back("soundness_bound_vacuous");
  return rep;
}

BoundReport completeness_bound(const VerificationPlan& plan) {
  BoundReport rep;
  const int k = plan.k;
  const double a = to_double(2 * bf(plan.R) / bf(plan.N));
  const double lnp = log_vacuum_tail(plan.d0);
  double t1;
  if (a <= 0.0) {
    t1 = static_cast<double>(k);  // no allowed failures: Chernoff term is vacuous
    rep.flags.push_back("completeness_first_term_vacuous");
  } else if (std::log(a) <= lnp) {
    // threshold rate at or below the honest tail: relative entropy direction flips
    t1 = static_cast<double>(k);
    rep.flags.push_back("completeness_first_term_vacuous");
  } else {
    const double d = a * (std::log(a) - lnp) +
                     (a < 1.0 ? (1.0 - a) * (std::log1p(-a) - std::log1p(-std::exp(lnp)))
                              : 0.0);
    t1 = to_double(BigFloat(k) * mp::exp(BigFloat(-0.5) * bf(plan.N) * d));
  }
  const BigFloat lm = bf(plan.L) - plan.m;
  double t2;
  if (lm <= 0) {
    t2 = 4.0;
    rep.flags.push_back("completeness_second_term_vacuous");
  } else {
    t2 = to_double(4 * mp::exp(-lm * BigFloat(plan.epsilon) * plan.epsilon /
                               (66 * BigFloat(plan.m) * plan.m * plan.k * plan.k)));
  }
  rep.completeness_terms = {t1, t2};
  rep.completeness_deficit = t1 + t2;
  if (rep.completeness_deficit >= 1.0) rep.flags.push_back("completeness_bound_vacuous");
  return rep;
}

double vacuum_tail(int d0) {
  if (d0 < 1) throw std::invalid_argument("vacuum_tail: d0 must be >= 1");
  return std::erfc(std::sqrt(0.5 * d0));
}

double log_vacuum_tail(int d0) {
  if (d0 < 1) throw std::invalid_argument("log_vacuum_tail: d0 must be >= 1");
  const double x = std::sqrt(0.5 * d0);
  const double v = std::erfc(x);
  if (v > 0.0 && std::isfinite(std::log(v))) {
    return std::log(v);
  }
  // erfc(x) ~ exp(-x^2)/(x sqrt(pi)) (1 - 1/(2x^2) + 3/(4x^4)) for large x
  const double inv2 = 1.0 / (2.0 * x * x);
  return -x * x - std::log(x * std::sqrt(M_PI)) + std::log1p(-inv2 + 3.0 * inv2 * inv2);
}

double binary_relative_entropy(double a, double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::domain_error("binary_relative_entropy: p must be in (0, 1)");
  }
  if (a < 0.0 || a > 1.0) {
    throw std::domain_error("binary_relative_entropy: a must be in [0, 1]");
  }
  if (a == 0.0) return -std::log1p(-p);
  if (a == 1.0) return -std::log(p);
  return a * std::log(a / p) + (1.0 - a) * (std::log1p(-a) - std::log1p(-p));
}

ConcentrationResult serfling_upper(std::int64_t sample_k, std::int64_t complement_n,
                                   double delta) {
  if (sample_k < 1 || complement_n < 1 || delta < 0.0) {
    throw std::invalid_argument("serfling_upper: invalid arguments");
  }
  const double n = static_cast<double>(complement_n);
  const double k = static_cast<double>(sample_k);
  const double raw = std::exp(-2.0 * delta * delta * n * k * k / ((n + k) * (k + 1)));
  return {clamp01(raw), raw, raw > 1.0};
}

ConcentrationResult serfling_lower(std::int64_t sample_k, std::int64_t complement_n,
                                   double delta) {
  if (sample_k < 1 || complement_n < 1 || delta < 0.0) {
    throw std::invalid_argument("serfling_lower: invalid arguments");
  }
  const double n = static_cast<double>(complement_n);
  const double k = static_cast<double>(sample_k);
  const double raw = std::exp(-2.0 * delta * delta * k * n * n / ((n + k) * (n + 1)));
  return {clamp01(raw), raw, raw > 1.0};
}

ConcentrationResult lemma1_bound(std::int64_t k_prime, std::int64_t n, std::int64_t r,
                                 std::int64_t q) {
  if (k_prime < 1 || n < 1 || r < 0 || q < 0) {
    throw std::invalid_argument("lemma1_bound: invalid arguments");
  }
  const double gap = 3.0 * q / (5.0 * n) - 4.0 * r / static_cast<double>(k_prime);
  if (gap < 0.0) {
    throw std::domain_error("lemma1_bound: requires 3Q/(5N) >= 4R/K'");
  }
  const double kp = static_cast<double>(k_prime);
  const double raw = 4.0 * std::exp(-kp * kp / (25.0 * (kp + 1.0)) * gap * gap);
  return {clamp01(raw), raw, raw > 1.0};
}

ConcentrationResult definetti_bound(int k, const BigInt& Q, const BigInt& L,
                                    const BigInt& N, int d0) {
  if (k < 1 || d0 < 1 || Q < 0 || L < 1 || N < 1) {
    throw std::invalid_argument("definetti_bound: invalid arguments");
  }
  if (N <= BigInt(k) * Q) {
    throw std::domain_error("definetti_bound: requires N > k Q");
  }
  BigFloat dim = mp::pow(BigFloat(d0), 2 * k);
  const BigFloat raw =
      2 * k * bf(Q) * bf(L) / bf(N) + 4 * bf(L) * dim / (bf(N) - k * bf(Q));
  const double rawd = to_double(raw);
  // A trace-distance bound: values above 2 carry no information.
  return {rawd, rawd, rawd > 2.0};
}

ConcentrationResult gamma_bound(double delta, int d0) {
  if (delta < 0.0 || delta > 1.0 || d0 < 1) {
    throw std::invalid_argument("gamma_bound: invalid arguments");
  }
  const double c0 = c0_constant();
  const double raw =
      4.0 * delta + 4.0 / (c0 * std::sqrt(M_PI * d0)) * std::exp(-d0 * c0 * c0);
  return {clamp01(raw), raw, raw > 1.0};
}

ConcentrationResult hoeffding_unbounded(const BigInt& L, std::int64_t m, int k,
                                        double epsilon, double chi4) {
  if (m < 1 || k < 1 || !(epsilon > 0.0) || !(chi4 > 0.0)) {
    throw std::invalid_argument("hoeffding_unbounded: invalid arguments");
  }
  if (L <= m) {
    return {1.0, 4.0, true};
  }
  const BigFloat lm = bf(L) - m;
  const BigFloat raw = 4 * mp::exp(-lm * BigFloat(epsilon) * epsilon /
                                   (BigFloat(33 * 4) * k * k * m * m * chi4));
  const double rawd = to_double(raw);
  return {clamp01(rawd), rawd, rawd > 1.0};
}

namespace {

std::int64_t narrow_or_throw(const BigInt& x, const char* what) {
  if (x > BigInt(std::numeric_limits<std::int64_t>::max())) {
    throw std::domain_error(std::string(what) +
                            ": value too large for a runnable plan");
  }
  return x.convert_to<std::int64_t>();
}

}  // namespace

RunPlan to_run_plan(const VerificationPlan& plan) {
  RunPlan rp;
  rp.k = plan.k;
  rp.m = plan.m;
  rp.epsilon = plan.epsilon;
  rp.d0 = plan.d0;
  rp.N = narrow_or_throw(plan.N, "N");
  rp.K = narrow_or_throw(plan.K, "K");
  rp.R = narrow_or_throw(plan.R, "R");
  rp.Q = narrow_or_throw(plan.Q, "Q");
  rp.L = narrow_or_throw(plan.L, "L");
  rp.total_registers = narrow_or_throw(plan.total_registers, "total_registers");
  rp.flags = plan.flags;
  return rp;
}

RunPlan desk_plan(int k, std::int64_t m, double epsilon, int d0, std::int64_t N,
                  std::int64_t L) {
  return to_run_plan(assemble_plan(k, m, epsilon, d0, BigInt(N), BigInt(L)));
}

}  // namespace cvverify
