#include <doctest.h>

#include <cmath>
#include <functional>

#include "blmol/autodiff.hpp"
#include "blmol/rng.hpp"
#include "oracles.hpp"

using namespace blmol;
using ad::Matrix;
using ad::Tape;

namespace {

Matrix random_matrix(int r, int c, RandomStream& rng) {
  Matrix m(r, c);
  for (double& v : m.data) v = 2.0 * rng.next_double() - 1.0;
  return m;
}

// Finite-difference check of d(loss)/d(param) for a builder that maps a
// parameter matrix to a scalar tape node.
void check_param_gradient(const Matrix& p0,
                          const std::function<Tape::Id(Tape&, Tape::Id)>& build,
                          int probes, RandomStream& rng) {
  Tape tape;
  const Tape::Id p = tape.param(p0);
  const Tape::Id loss = build(tape, p);
  tape.backward(loss);
  const Matrix analytic = tape.grad(p);

  for (int t = 0; t < probes; ++t) {
    const auto idx = static_cast<std::size_t>(rng.next_int(0, static_cast<std::int64_t>(p0.size()) - 1));
    const double h = 1e-5;
    const auto eval = [&](double delta) {
      Matrix shifted = p0;
      shifted.data[idx] += delta;
      Tape t2;
      const Tape::Id p2 = t2.param(shifted);
      return t2.value(build(t2, p2)).at(0, 0);
    };
    const double fd = (eval(h) - eval(-h)) / (2.0 * h);
    CHECK(testing::gradient_rel_error(analytic.data[idx], fd) < 1e-5);
  }
}

}  // namespace

TEST_CASE("matmul forward and gradient") {
  Tape tape;
  Matrix a(2, 3), b(3, 2);
  double v = 1.0;
  for (double& x : a.data) x = v++;
  for (double& x : b.data) x = 0.5 * v++;
  const auto ia = tape.param(a);
  const auto ib = tape.param(b);
  const auto c = tape.matmul(ia, ib);
  // Row 0: (1,2,3) . cols of b.
  CHECK(tape.value(c).at(0, 0) == doctest::Approx(1 * 3.5 + 2 * 4.5 + 3 * 5.5));

  RandomStream rng = derive_stream(61, "matmul");
  check_param_gradient(random_matrix(2, 3, rng), [&](Tape& t, Tape::Id p) {
    const auto w = t.input(b);
    const auto prod = t.matmul(p, w);
    return t.mse_onehot(t.softmax_rows(prod), {0, 1});
  }, 6, rng);
}

TEST_CASE("elementwise and broadcast ops match finite differences") {
  RandomStream rng = derive_stream(62, "elementwise");
  const Matrix other = random_matrix(3, 4, rng);
  const Matrix row = random_matrix(1, 4, rng);

  const std::vector<std::pair<const char*, std::function<Tape::Id(Tape&, Tape::Id)>>> cases = {
      {"add+mul", [&](Tape& t, Tape::Id p) {
         const auto o = t.input(other);
         const auto x = t.mul(t.add(p, o), o);
         return t.nll_logits(x, {0, 3, 2});
       }},
      {"sub+relu", [&](Tape& t, Tape::Id p) {
         const auto o = t.input(other);
         return t.nll_logits(t.relu(t.sub(p, o)), {1, 0, 2});
       }},
      {"tanh+sigmoid", [&](Tape& t, Tape::Id p) {
         return t.nll_logits(t.sigmoid(t.tanh_op(p)), {0, 1, 3});
       }},
      {"emax", [&](Tape& t, Tape::Id p) {
         const auto o = t.input(other);
         return t.nll_logits(t.emax(p, o), {2, 2, 1});
       }},
      {"add_row+scale", [&](Tape& t, Tape::Id p) {
         const auto r = t.input(row);
         return t.nll_logits(t.scale(t.add_row(p, r), 1.7), {0, 1, 2});
       }},
      {"softmax+mse", [&](Tape& t, Tape::Id p) {
         return t.mse_onehot(t.softmax_rows(p), {3, 0, 1});
       }},
      {"mean_rows", [&](Tape& t, Tape::Id p) {
         return t.nll_logits(t.mean_rows(p), {2});
       }},
      {"gather+concat_cols", [&](Tape& t, Tape::Id p) {
         const auto g1 = t.gather_rows(p, {0, 2});
         const auto g2 = t.gather_rows(p, {1, 1});
         return t.nll_logits(t.concat_cols({g1, g2}), {0, 5});
       }},
      {"col+scale_rows", [&](Tape& t, Tape::Id p) {
         const auto c0 = t.col(p, 0);
         return t.nll_logits(t.scale_rows(p, c0), {1, 2, 3});
       }},
      {"concat_rows+weighted_sum", [&](Tape& t, Tape::Id p) {
         const auto o = t.input(other);
         const auto cat = t.concat_rows({p, o});
         const auto l1 = t.nll_logits(cat, {0, 1, 2, 3, 0, 1});
         const auto l2 = t.mse_onehot(t.softmax_rows(p), {0, 0, 0});
         return t.weighted_sum({l1, l2}, {0.3, 0.7});
       }},
  };

  for (const auto& [name, builder] : cases) {
    CAPTURE(name);
    check_param_gradient(random_matrix(3, 4, rng), builder, 8, rng);
  }
}

TEST_CASE("bce_logits value and gradient") {
  Tape tape;
  Matrix z(2, 1);
  z.at(0, 0) = 0.0;
  z.at(1, 0) = 0.0;
  const auto iz = tape.param(z);
  const auto loss = tape.bce_logits(iz, {1.0, 0.0});
  CHECK(tape.value(loss).at(0, 0) == doctest::Approx(std::log(2.0)));

  RandomStream rng = derive_stream(63, "bce");
  check_param_gradient(random_matrix(4, 1, rng), [&](Tape& t, Tape::Id p) {
    return t.bce_logits(p, {1.0, 0.0, 1.0, 1.0});
  }, 4, rng);
}

TEST_CASE("backward can run repeatedly for different losses on one tape") {
  Tape tape;
  Matrix p0(1, 2);
  p0.at(0, 0) = 0.3;
  p0.at(0, 1) = -0.4;
  const auto p = tape.param(p0);
  const auto l1 = tape.nll_logits(p, {0});
  const auto l2 = tape.nll_logits(p, {1});

  tape.backward(l1);
  const Matrix g1 = tape.grad(p);
  tape.backward(l2);
  const Matrix g2 = tape.grad(p);
  tape.backward(l1);
  const Matrix g1_again = tape.grad(p);

  CHECK(g1.data == g1_again.data);   // adjoints fully reset between sweeps
  CHECK(g1.data != g2.data);
  // Gradient rows are (p - onehot); the labels differ, so the rows differ by
  // exactly the one-hot difference.
  CHECK(g1.at(0, 0) - g2.at(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(g1.at(0, 1) - g2.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
}
