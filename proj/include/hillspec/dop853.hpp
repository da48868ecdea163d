#pragma once

// Eighth-order Dormand-Prince pair (Hairer-Wanner DOP853) for complex
// states of fixed size, with a 5(3) error estimate and a fixed-step mode.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>

namespace hillspec::detail {

template <std::size_t N>
using CState = std::array<std::complex<double>, N>;

namespace dp {
inline constexpr double c2 = 0.526001519587677318785587544488E-01, c3 = 0.789002279381515978178381316732E-01,
                        c4 = 0.118350341907227396726757197510E+00, c5 = 0.281649658092772603273242802490E+00,
                        c6 = 0.333333333333333333333333333333E+00, c7 = 0.25E+00,
                        c8 = 0.307692307692307692307692307692E+00, c9 = 0.651282051282051282051282051282E+00,
                        c10 = 0.6E+00, c11 = 0.857142857142857142857142857142E+00;
inline constexpr double b1 = 5.42937341165687622380535766363E-2, b6 = 4.45031289275240888144113950566E0,
                        b7 = 1.89151789931450038304281599044E0, b8 = -5.8012039600105847814672114227E0,
                        b9 = 3.1116436695781989440891606237E-1, b10 = -1.52160949662516078556178806805E-1,
                        b11 = 2.01365400804030348374776537501E-1, b12 = 4.47106157277725905176885569043E-2;
inline constexpr double a21 = 5.26001519587677318785587544488E-2, a31 = 1.97250569845378994544595329183E-2,
                        a32 = 5.91751709536136983633785987549E-2, a41 = 2.95875854768068491816892993775E-2,
                        a43 = 8.87627564304205475450678981324E-2, a51 = 2.41365134159266685502369798665E-1,
                        a53 = -8.84549479328286085344864962717E-1, a54 = 9.24834003261792003115737966543E-1,
                        a61 = 3.7037037037037037037037037037E-2, a64 = 1.70828608729473871279604482173E-1,
                        a65 = 1.25467687566822425016691814123E-1, a71 = 3.7109375E-2,
                        a74 = 1.70252211019544039314978060272E-1, a75 = 6.02165389804559606850219397283E-2,
                        a76 = -1.7578125E-2;
inline constexpr double a81 = 3.70920001185047927108779319836E-2, a84 = 1.70383925712239993810214054705E-1,
                        a85 = 1.07262030446373284651809199168E-1, a86 = -1.53194377486244017527936158236E-2,
                        a87 = 8.27378916381402288758473766002E-3, a91 = 6.24110958716075717114429577812E-1,
                        a94 = -3.36089262944694129406857109825E0, a95 = -8.68219346841726006818189891453E-1,
                        a96 = 2.75920996994467083049415600797E1, a97 = 2.01540675504778934086186788979E1,
                        a98 = -4.34898841810699588477366255144E1, a101 = 4.77662536438264365890433908527E-1,
                        a104 = -2.48811461997166764192642586468E0, a105 = -5.90290826836842996371446475743E-1,
                        a106 = 2.12300514481811942347288949897E1, a107 = 1.52792336328824235832596922938E1,
                        a108 = -3.32882109689848629194453265587E1, a109 = -2.03312017085086261358222928593E-2;
inline constexpr double a111 = -9.3714243008598732571704021658E-1, a114 = 5.18637242884406370830023853209E0,
                        a115 = 1.09143734899672957818500254654E0, a116 = -8.14978701074692612513997267357E0,
                        a117 = -1.85200656599969598641566180701E1, a118 = 2.27394870993505042818970056734E1,
                        a119 = 2.49360555267965238987089396762E0, a1110 = -3.0467644718982195003823669022E0,
                        a121 = 2.27331014751653820792359768449E0, a124 = -1.05344954667372501984066689879E1,
                        a125 = -2.00087205822486249909675718444E0, a126 = -1.79589318631187989172765950534E1,
                        a127 = 2.79488845294199600508499808837E1, a128 = -2.85899827713502369474065508674E0,
                        a129 = -8.87285693353062954433549289258E0, a1210 = 1.23605671757943030647266201528E1,
                        a1211 = 6.43392746015763530355970484046E-1;
inline constexpr double bhh1 = 0.244094488188976377952755905512E+00, bhh2 = 0.733846688281611857341361741547E+00,
                        bhh3 = 0.220588235294117647058823529412E-01;
inline constexpr double er1 = 0.1312004499419488073250102996E-01, er6 = -0.1225156446376204440720569753E+01,
                        er7 = -0.4957589496572501915214079952E+00, er8 = 0.1664377182454986536961530415E+01,
                        er9 = -0.3503288487499736816886487290E+00, er10 = 0.3341791187130174790297318841E+00,
                        er11 = 0.8192320648511571246570742613E-01, er12 = -0.2235530786388629525884427845E-01;
}  // namespace dp

template <std::size_t N, class Rhs>
class Dop853 {
 public:
  using State = CState<N>;

  struct Result {
    State y{};
    bool ok = false;
    int accepted = 0;
    int rejected = 0;
    double err_sum = 0.0;  // accumulated scaled local error estimates
  };

  explicit Dop853(Rhs f) : f_(std::move(f)) {}

  /// Adaptive integration from x0 to x1.
  Result integrate(double x0, double x1, const State& y0, double rtol, double atol, double h0,
                   int max_steps = 100000) const {
    Result res;
    State y = y0, k1{}, ynew{}, k4{};
    double x = x0;
    double h = std::min(h0, x1 - x0);
    bool reject = false, last = false;
    f_(x, y, k1);
    const double uround = 2.3e-16;
    while (true) {
      if (res.accepted + res.rejected > max_steps) return res;
      if (0.1 * std::abs(h) <= std::abs(x) * uround) return res;
      if (x + 1.01 * h - x1 > 0.0) {
        h = x1 - x;
        last = true;
      }
      Stages st;
      step12(x, y, h, k1, ynew, st);
      const double err = std::abs(h) * error_estimate(y, ynew, k1, st, rtol, atol);
      if (!std::isfinite(err)) return res;
      const double fac11 = std::pow(err, 1.0 / 8);
      const double fac = std::max(1.0 / 6.0, std::min(3.0, fac11 / 0.9));
      double hnew = h / fac;
      if (err <= 1.0) {
        ++res.accepted;
        res.err_sum += err;
        f_(x + h, ynew, k4);
        k1 = k4;
        y = ynew;
        x += h;
        if (last) {
          res.y = y;
          res.ok = true;
          return res;
        }
        if (std::abs(hnew) > x1 - x0) hnew = x1 - x0;
        if (reject) hnew = std::min(std::abs(hnew), std::abs(h));
        reject = false;
      } else {
        hnew = h / std::min(3.0, fac11 / 0.9);
        reject = true;
        if (res.accepted >= 1) ++res.rejected;
        last = false;
      }
      h = hnew;
    }
  }

  /// `steps` equal eighth-order steps from x0 to x1.
  State integrate_fixed(double x0, double x1, const State& y0, int steps) const {
    State y = y0, k1{}, ynew{};
    const double h = (x1 - x0) / steps;
    for (int s = 0; s < steps; ++s) {
      const double x = x0 + s * h;
      f_(x, y, k1);
      Stages st;
      step12(x, y, h, k1, ynew, st);
      y = ynew;
    }
    return y;
  }

 private:
  struct Stages {
    State k2, k3, k6, k7, k8, k9, k10, k4;
  };

  void step12(double x, const State& y, double h, const State& k1, State& out, Stages& s) const {
    using namespace dp;
    State w{}, k5{};
    for (std::size_t i = 0; i < N; ++i) w[i] = y[i] + h * a21 * k1[i];
    f_(x + c2 * h, w, s.k2);
    for (std::size_t i = 0; i < N; ++i) w[i] = y[i] + h * (a31 * k1[i] + a32 * s.k2[i]);
    f_(x + c3 * h, w, s.k3);
    for (std::size_t i = 0; i < N; ++i) w[i] = y[i] + h * (a41 * k1[i] + a43 * s.k3[i]);
    f_(x + c4 * h, w, s.k4);
    for (std::size_t i = 0; i < N; ++i) w[i] = y[i] + h * (a51 * k1[i] + a53 * s.k3[i] + a54 * s.k4[i]);
    f_(x + c5 * h, w, k5);
    for (std::size_t i = 0; i < N; ++i) w[i] = y[i] + h * (a61 * k1[i] + a64 * s.k4[i] + a65 * k5[i]);
    f_(x + c6 * h, w, s.k6);
    for (std::size_t i = 0; i < N; ++i)
      w[i] = y[i] + h * (a71 * k1[i] + a74 * s.k4[i] + a75 * k5[i] + a76 * s.k6[i]);
    f_(x + c7 * h, w, s.k7);
    for (std::size_t i = 0; i < N; ++i)
      w[i] = y[i] + h * (a81 * k1[i] + a84 * s.k4[i] + a85 * k5[i] + a86 * s.k6[i] + a87 * s.k7[i]);
    f_(x + c8 * h, w, s.k8);
    for (std::size_t i = 0; i < N; ++i)
      w[i] = y[i] + h * (a91 * k1[i] + a94 * s.k4[i] + a95 * k5[i] + a96 * s.k6[i] + a97 * s.k7[i] +
                         a98 * s.k8[i]);
    f_(x + c9 * h, w, s.k9);
    for (std::size_t i = 0; i < N; ++i)
      w[i] = y[i] + h * (a101 * k1[i] + a104 * s.k4[i] + a105 * k5[i] + a106 * s.k6[i] + a107 * s.k7[i] +
                         a108 * s.k8[i] + a109 * s.k9[i]);
    f_(x + c10 * h, w, s.k10);
    for (std::size_t i = 0; i < N; ++i)
      w[i] = y[i] + h * (a111 * k1[i] + a114 * s.k4[i] + a115 * k5[i] + a116 * s.k6[i] + a117 * s.k7[i] +
                         a118 * s.k8[i] + a119 * s.k9[i] + a1110 * s.k10[i]);
    f_(x + c11 * h, w, s.k2);
    for (std::size_t i = 0; i < N; ++i)
      w[i] = y[i] + h * (a121 * k1[i] + a124 * s.k4[i] + a125 * k5[i] + a126 * s.k6[i] + a127 * s.k7[i] +
                         a128 * s.k8[i] + a129 * s.k9[i] + a1210 * s.k10[i] + a1211 * s.k2[i]);
    f_(x + h, w, s.k3);
    for (std::size_t i = 0; i < N; ++i) {
      s.k4[i] = b1 * k1[i] + b6 * s.k6[i] + b7 * s.k7[i] + b8 * s.k8[i] + b9 * s.k9[i] + b10 * s.k10[i] +
                b11 * s.k2[i] + b12 * s.k3[i];
      out[i] = y[i] + h * s.k4[i];
    }
  }

  static double error_estimate(const State& y, const State& ynew, const State& k1, const Stages& s, double rtol,
                               double atol) {
    using namespace dp;
    double err = 0.0, err2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sk = 1.0 / (atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i])));
      const double e2 = std::abs(s.k4[i] - bhh1 * k1[i] - bhh2 * s.k9[i] - bhh3 * s.k3[i]) * sk;
      err2 += e2 * e2;
      const double e1 = std::abs(er1 * k1[i] + er6 * s.k6[i] + er7 * s.k7[i] + er8 * s.k8[i] + er9 * s.k9[i] +
                                 er10 * s.k10[i] + er11 * s.k2[i] + er12 * s.k3[i]) *
                        sk;
      err += e1 * e1;
    }
    const double deno = err + 0.01 * err2;
    return err * std::sqrt(1.0 / (deno <= 0.0 ? static_cast<double>(N) : deno * static_cast<double>(N)));
  }

  Rhs f_;
};

}  // namespace hillspec::detail
