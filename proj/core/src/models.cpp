#include "vcf/models.hpp"

#include <stdexcept>

namespace vcf {

namespace {

Scalar rat(long num, long den = 1) { return Scalar(GaussianRational(num, den)); }
Scalar qs(const mpq_class& q) { return Scalar(GaussianRational(q)); }

/// Double factorial over odd arguments, with (-1)!! = 1.
mpq_class double_factorial(long n) {
  mpq_class acc(1);
  for (long t = n; t >= 2; t -= 2) acc *= t;
  return acc;
}

/// Harmonic number 1 + 1/2 + ... + 1/j (0 for j = 0).
mpq_class harmonic(unsigned j) {
  mpq_class acc(0);
  for (unsigned t = 1; t <= j; ++t) acc += mpq_class(1, t);
  return acc;
}

}  // namespace

Model model_kw(int depth) {
  Model M;
  M.name = "kw";
  M.depth = depth;

  StateEnd gram(1);
  gram.at(0, 0) = rat(1);
  M.F.space.dim = 1;
  M.F.space.eta = Pairing(gram);
  M.F.space.mu = {rat(0)};
  M.F.space.delta = rat(0);

  StateEnd one(1);
  one.at(0, 0) = rat(1);
  M.F.mult = {one};
  M.F.unit = StateVec(1);
  M.F.unit[0] = rat(1);
  M.F.euler = StateVec(1);
  M.F.rho = StateEnd(1);

  // S = I exactly, nu = v = unit, u = unit (the dilaton shift at level one).
  EndSeries S(StateEnd(1), 0, 0, true, true);
  S.ref(0) = StateEnd::identity(1);
  VecSeries nu(StateVec(1), 0, 0, true, true);
  nu.ref(0) = M.F.unit;
  VecSeries u(StateVec(1), 0, 0, true, true);
  u.ref(0) = M.F.unit;
  M.C.s_matrix = S;
  M.C.nu_vector = nu;
  M.C.vacuum = nu;
  M.C.shift_tau0 = StateVec(1);
  M.C.shift_u = u;

  M.index = virasoro_index(M.C, M.F);
  return M;
}

Model model_rspin(int r, int depth) {
  if (r < 2) throw std::invalid_argument("rspin requires r >= 2");
  const int n = r - 1;
  Model M;
  M.name = "rspin" + std::to_string(r);
  M.depth = depth;

  StateEnd gram(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) gram.at(static_cast<size_t>(i), static_cast<size_t>(n - 1 - i)) = rat(1);
  M.F.space.dim = n;
  M.F.space.eta = Pairing(gram);
  M.F.space.mu.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    M.F.space.mu[static_cast<size_t>(i)] = qs(mpq_class(2 * (i + 1) - r, 2 * r));
  M.F.space.delta = rat(3);

  // phi_a * phi_b = (eps/r)^m phi_{c+1} where a+b = (r-1) m + c, 0 <= c <= r-2.
  // Basis index i corresponds to phi_{i+1}.
  const Scalar eps = Scalar::parameter("eps");
  const Scalar eps_over_r = qs(mpq_class(1, r)) * eps;
  M.F.mult.assign(static_cast<size_t>(n), StateEnd(static_cast<size_t>(n)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      int s = (i + 1) + (j + 1);
      int m = s / (r - 1);
      int c = s - (r - 1) * m;
      M.F.mult[static_cast<size_t>(i)].at(static_cast<size_t>(c), static_cast<size_t>(j)) =
          eps_over_r.pow(m);
    }

  M.F.unit = StateVec(static_cast<size_t>(n));
  if (r == 2)
    M.F.unit[0] = rat(4) * Scalar::parameter("eps", -2);
  else
    M.F.unit[static_cast<size_t>(r - 3)] = rat(r) * Scalar::parameter("eps", -1);
  M.F.euler = StateVec(static_cast<size_t>(n));
  M.F.euler[static_cast<size_t>(n - 1)] = rat(r - 1);
  M.F.rho = StateEnd(static_cast<size_t>(n));

  // S-matrix closed form: for k >= 1 the (b, a) entry is
  //   (-1)^{k+m} [x]_{ratio} eps^m / m!   with  m = (r k + a - b)/(r-1),
  // x = a/r, and the Gamma-function ratio Gamma(x)/Gamma(x + k - m).
  EndSeries S(StateEnd(static_cast<size_t>(n)), -depth, 0, /*zero_below=*/false,
              /*zero_above=*/true);
  S.ref(0) = StateEnd::identity(static_cast<size_t>(n));
  for (int k = 1; k <= depth; ++k) {
    StateEnd sk(static_cast<size_t>(n));
    for (int a = 1; a <= n; ++a)
      for (int b = 1; b <= n; ++b) {
        long num = static_cast<long>(r) * k + a - b;
        if (num <= 0 || num % (r - 1) != 0) continue;
        long m = num / (r - 1);
        mpq_class x(a, r);
        mpq_class ratio;
        if (k >= m)
          ratio = 1 / rising_factorial(x, static_cast<unsigned>(k - m));
        else
          ratio = rising_factorial(x + mpq_class(k - m), static_cast<unsigned>(m - k));
        mpq_class coeff = ratio / factorial(static_cast<unsigned>(m));
        if ((k + m) % 2 != 0) coeff = -coeff;
        sk.at(static_cast<size_t>(b - 1), static_cast<size_t>(a - 1)) =
            qs(coeff) * Scalar::parameter("eps", static_cast<int>(m));
      }
    S.ref(-k) = sk;
  }
  M.C.s_matrix = S;

  // nu closed form: component phi_a picks up m!/(m r + a)! eps^{m r + a + 1}
  // at z^{-(m(r-1)+a+1)} for 1 <= a <= r-2, and the top component picks up
  // r m!/(r m)! eps^{r m} at z^{-(m(r-1)+1)}.
  VecSeries nu(StateVec(static_cast<size_t>(n)), -depth, -1, /*zero_below=*/false,
               /*zero_above=*/true);
  for (int a = 1; a <= r - 2; ++a)
    for (long m = 0;; ++m) {
      long e = m * (r - 1) + a + 1;
      if (e > depth) break;
      mpq_class coeff = factorial(static_cast<unsigned>(m)) /
                        factorial(static_cast<unsigned>(m * r + a));
      nu.ref(static_cast<int>(-e))[static_cast<size_t>(a - 1)] =
          qs(coeff) * Scalar::parameter("eps", static_cast<int>(m * r + a + 1));
    }
  for (long m = 0;; ++m) {
    long e = m * (r - 1) + 1;
    if (e > depth) break;
    mpq_class coeff = mpq_class(r) * factorial(static_cast<unsigned>(m)) /
                      factorial(static_cast<unsigned>(r * m));
    nu.ref(static_cast<int>(-e))[static_cast<size_t>(n - 1)] =
        qs(coeff) * Scalar::parameter("eps", static_cast<int>(m * r));
  }
  M.C.nu_vector = nu;

  // Vacuum closed form: component phi_a picks up
  //   r (m r - 1 - a)!/(m-1)! (-1)^e eps^{-(m r - a - 1)}  at z^e,
  // e = m(r-1) - a - 1, for 1 <= a <= r-2 and m >= 1; the top component
  // picks up r (m r)!/m! (-1)^e eps^{-m r} at z^e, e = m(r-1) - 1.
  VecSeries vac(StateVec(static_cast<size_t>(n)), 0, depth, /*zero_below=*/true,
                /*zero_above=*/false);
  for (int a = 1; a <= r - 2; ++a)
    for (long m = 1;; ++m) {
      long e = m * (r - 1) - a - 1;
      if (e > depth) break;
      if (e < 0) continue;
      mpq_class coeff = mpq_class(r) * factorial(static_cast<unsigned>(m * r - 1 - a)) /
                        factorial(static_cast<unsigned>(m - 1));
      if (e % 2 != 0) coeff = -coeff;
      vac.ref(static_cast<int>(e))[static_cast<size_t>(a - 1)] =
          qs(coeff) * Scalar::parameter("eps", static_cast<int>(-(m * r - a - 1)));
    }
  for (long m = 1;; ++m) {
    long e = m * (r - 1) - 1;
    if (e > depth) break;
    if (e < 0) continue;
    mpq_class coeff = mpq_class(r) * factorial(static_cast<unsigned>(m * r)) /
                      factorial(static_cast<unsigned>(m));
    if (e % 2 != 0) coeff = -coeff;
    vac.ref(static_cast<int>(e))[static_cast<size_t>(n - 1)] =
        qs(coeff) * Scalar::parameter("eps", static_cast<int>(-m * r));
  }
  M.C.vacuum = vac;

  M.C.shift_tau0 = StateVec(static_cast<size_t>(n));
  M.C.shift_tau0[static_cast<size_t>(n - 1)] = rat(r);
  M.C.shift_u = VecSeries::zero_series(StateVec(static_cast<size_t>(n)));

  M.index = virasoro_index(M.C, M.F);
  return M;
}

Model model_egdd(int depth) {
  Model M;
  M.name = "egdd";
  M.depth = depth;

  ParamRegistry::factor_id("s1", GaussianRational(1), "s2");
  ParamRegistry::factor_id("s1", GaussianRational(-1), "s2");

  const Scalar s1sq = Scalar::parameter("s1", 2);
  const Scalar s2sq = Scalar::parameter("s2", 2);
  const Scalar kappa = s1sq + s2sq;                            // eps1 + eps2
  const Scalar lam = Scalar::parameter("s1", 2) * Scalar::parameter("s2", 2);  // eps1 eps2
  const Scalar d2 = (s1sq - s2sq) * (s1sq - s2sq);             // (eps1 - eps2)^2
  const Scalar inv_d2 = d2.inverse();

  StateEnd gram(2);
  gram.at(0, 1) = rat(1);
  gram.at(1, 0) = rat(1);
  M.F.space.dim = 2;
  M.F.space.eta = Pairing(gram);
  M.F.space.mu = {rat(1, 2), rat(-1, 2)};
  M.F.space.delta = rat(3);

  StateEnd m0(2), m1(2);
  m0.at(0, 0) = kappa;
  m0.at(1, 0) = rat(2) * lam;
  m0.at(0, 1) = rat(2);
  m0.at(1, 1) = kappa;
  m1.at(0, 0) = rat(2);
  m1.at(1, 0) = kappa;
  m1.at(0, 1) = kappa * lam.inverse();
  m1.at(1, 1) = rat(2);
  M.F.mult = {m0, m1};

  M.F.unit = StateVec(2);
  M.F.unit[0] = kappa * inv_d2;
  M.F.unit[1] = rat(-2) * lam * inv_d2;
  M.F.euler = StateVec(2);
  M.F.euler[0] = rat(1);
  M.F.rho = StateEnd(2);
  M.F.rho.at(0, 1) = rat(2);

  // S-matrix closed form at the base point (log terms vanish there, the
  // harmonic-number parts survive):
  //   (S_n)^0_0 = sum_{i+2j=n}   kappa^i lam^j / (i! j! j!)
  //   (S_n)^0_1 = sum_{i+2j=n-1} kappa^i lam^j / (i! j! j!) (-2 H_j)
  //   (S_n)^1_0 = sum_{i+2j=n+1, j>=1} kappa^i lam^j / (i! j! (j-1)!)
  //   (S_n)^1_1 = sum_{i+2j=n}   kappa^i lam^j / (i! j! j!) (1 - 2 j H_j)
  EndSeries S(StateEnd(2), -depth, 0, /*zero_below=*/false, /*zero_above=*/true);
  S.ref(0) = StateEnd::identity(2);
  auto power_sum = [&](int total, bool shift_j_fact, auto&& weight) {
    Scalar acc = rat(0);
    for (int j = 0; 2 * j <= total; ++j) {
      int i = total - 2 * j;
      if (shift_j_fact && j < 1) continue;
      mpq_class den = factorial(static_cast<unsigned>(i)) * factorial(static_cast<unsigned>(j)) *
                      factorial(static_cast<unsigned>(shift_j_fact ? j - 1 : j));
      mpq_class w = weight(j);
      if (w == 0) continue;
      acc += qs(w / den) * kappa.pow(i) * lam.pow(j);
    }
    return acc;
  };
  for (int k = 1; k <= depth; ++k) {
    StateEnd sk(2);
    sk.at(0, 0) = power_sum(k, false, [](int) -> mpq_class { return mpq_class(1); });
    sk.at(0, 1) = power_sum(k - 1, false, [](int j) -> mpq_class {
      return mpq_class(-2) * harmonic(static_cast<unsigned>(j));
    });
    sk.at(1, 0) = power_sum(k + 1, true, [](int) -> mpq_class { return mpq_class(1); });
    sk.at(1, 1) = power_sum(k, false, [](int j) -> mpq_class {
      return 1 - mpq_class(2 * j) * harmonic(static_cast<unsigned>(j));
    });
    S.ref(-k) = sk;
  }
  M.C.s_matrix = S;

  // nu grows out of its two-term seed; the z^{-2} layer has a kernel
  // direction the recursion cannot see.
  VecSeries seed(StateVec(2), -2, -1, /*zero_below=*/false, /*zero_above=*/true);
  seed.ref(-1)[0] = rat(1);
  seed.ref(-1)[1] = rat(-1, 2) * kappa;
  seed.ref(-2)[1] = rat(-1, 2) * d2;
  M.C.nu_vector = nu_solve(M.F, seed, depth);

  // Vacuum closed form at the base point:
  //   v_k[a] = sum_i (-1)^{k+a+i} (2k+1-2i)!! (k+1+a)! /
  //            (2^{i+a} i! (k+1+a-2i)!) kappa^{k+1+a-2i} / (eps1-eps2)^{2k+2-2i}
  VecSeries vac(StateVec(2), 0, depth, /*zero_below=*/true, /*zero_above=*/false);
  for (int k = 0; k <= depth; ++k)
    for (int a = 0; a < 2; ++a) {
      Scalar acc = rat(0);
      for (int i = 0; 2 * i <= k + 1 + a; ++i) {
        mpq_class num = double_factorial(2 * k + 1 - 2 * i) *
                        factorial(static_cast<unsigned>(k + 1 + a));
        mpq_class den(mpz_class(1) << static_cast<unsigned>(i + a));
        den *= factorial(static_cast<unsigned>(i)) *
               factorial(static_cast<unsigned>(k + 1 + a - 2 * i));
        mpq_class coeff = num / den;
        if ((k + a + i) % 2 != 0) coeff = -coeff;
        acc += qs(coeff) * kappa.pow(k + 1 + a - 2 * i) * inv_d2.pow(k + 1 - i);
      }
      vac.ref(k)[static_cast<size_t>(a)] = acc;
    }
  M.C.vacuum = vac;

  M.C.shift_tau0 = StateVec(2);
  M.C.shift_tau0[0] = rat(1);
  M.C.shift_tau0[1] = rat(-1, 2) * kappa;
  M.C.shift_u = VecSeries::zero_series(StateVec(2));

  M.index = virasoro_index(M.C, M.F);
  return M;
}

Model model_by_name(const std::string& name, int depth) {
  if (name == "kw") return model_kw(depth);
  if (name == "egdd") return model_egdd(depth);
  if (name.rfind("rspin", 0) == 0) {
    int r = std::stoi(name.substr(5));
    return model_rspin(r, depth);
  }
  throw std::invalid_argument("unknown model: " + name);
}

}  // namespace vcf
