#include <doctest.h>

#include <numeric>

#include "nsgc/errors.hpp"
#include "nsgc/linop.hpp"
#include "nsgc/rng.hpp"
#include "oracles.hpp"

using namespace nsgc;
using Eigen::VectorXd;
using Op = MaskedChannelOp<double>;

namespace {

Op random_op(Rng& rng, Index l, Index m, Index n) {
  std::vector<Index> subs(static_cast<std::size_t>(l)), slots(static_cast<std::size_t>(m));
  std::iota(subs.begin(), subs.end(), Index{0});
  std::iota(slots.begin(), slots.end(), Index{0});
  std::shuffle(subs.begin(), subs.end(), rng);
  std::shuffle(slots.begin(), slots.end(), rng);
  subs.resize(static_cast<std::size_t>(n));
  slots.resize(static_cast<std::size_t>(n));
  return Op(l, m, subs, slots, {standard_normal(rng, n), standard_normal(rng, n)});
}

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("apply on hand-sized operators") {
  const auto id = Op::mask(2, 2, {0, 1}, {0, 1});
  CHECK(apply(id, vec({3, 5})).re == vec({3, 5}));

  const Op scale(2, 2, {0}, {0}, {vec({2}), vec({0})});
  const auto y = apply(scale, vec({3, 5}));
  CHECK(y.re == vec({6, 0}));
  CHECK(y.im == vec({0, 0}));
}

TEST_CASE("apply matches the dense matrix product") {
  Rng rng = make_rng(1, {});
  const auto op = random_op(rng, 8, 6, 4);
  const ComplexVector<double> x{standard_normal(rng, 6), standard_normal(rng, 6)};
  const Eigen::VectorXcd dense = oracle::dense(op) * oracle::to_complex(x);
  CHECK((oracle::to_complex(apply(op, x)) - dense).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("pinv_apply") {
  const auto id = Op::identity(2);
  CHECK(pinv_apply(id, ComplexVector<double>::from_real(vec({3, 5}))).re == vec({3, 5}));

  const Op scale(1, 2, {0}, {0}, {vec({2}), vec({0})});
  CHECK(pinv_apply(scale, ComplexVector<double>::from_real(vec({6}))).re == vec({3, 0}));

  Rng rng = make_rng(2, {});
  for (int trial = 0; trial < 50; ++trial) {
    const auto op = random_op(rng, 10, 7, trial % 8);
    const ComplexVector<double> r{standard_normal(rng, 10), standard_normal(rng, 10)};
    const Eigen::VectorXcd want = oracle::pinv(oracle::dense(op)) * oracle::to_complex(r);
    CHECK((oracle::to_complex(pinv_apply(op, r)) - want).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("projectors") {
  Rng rng = make_rng(3, {});
  const VectorXd x = standard_normal(rng, 5);

  const auto id = Op::identity(5);
  CHECK(range_project(id, x) == x);
  CHECK(null_project(id, x) == VectorXd::Zero(5));

  const Op empty(3, 5, {}, {}, ComplexVector<double>::zeros(0));
  CHECK(range_project(empty, x) == VectorXd::Zero(5));
  CHECK(null_project(empty, x) == x);

  const auto op = random_op(rng, 6, 5, 3);
  CHECK(oracle::to_complex(apply(op, null_project(op, x))).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(range_project(op, range_project(op, x)) == range_project(op, x));
}

TEST_CASE("decompose") {
  Rng rng = make_rng(4, {});
  const auto zero = decompose(Op::identity(4), VectorXd::Zero(4));
  CHECK(zero.first.isZero());
  CHECK(zero.second.isZero());

  const VectorXd x = standard_normal(rng, 4);
  const auto [r, n] = decompose(Op::identity(4), x);
  CHECK(r == x);
  CHECK(n.isZero());

  for (int trial = 0; trial < 20; ++trial) {
    const auto op = random_op(rng, 9, 9, trial % 9);
    const VectorXd y = standard_normal(rng, 9);
    const auto [rp, np] = decompose(op, y);
    CHECK((rp + np - y).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(rp.dot(np)) < 1e-12);
  }
}

TEST_CASE("construction contracts") {
  const ComplexVector<double> one{vec({1}), vec({0})};
  CHECK_THROWS_AS(Op(2, 2, {2}, {0}, one), ContractError);
  CHECK_THROWS_AS(Op(2, 2, {0}, {3}, one), ContractError);
  CHECK_THROWS_AS(Op(2, 2, {0, 0}, {0, 1}, {vec({1, 1}), vec({0, 0})}), ContractError);
  CHECK_THROWS_AS(Op(2, 2, {0}, {0}, {vec({0}), vec({0})}), SingularOperatorError);
  CHECK_THROWS_AS(Op(2, 2, {0}, {0}, {vec({std::nan("")}), vec({0})}), ContractError);
  CHECK_THROWS_AS(apply(Op::identity(3), VectorXd::Zero(2)), ContractError);
}

TEST_CASE("operator record round trip") {
  Rng rng = make_rng(5, {});
  const auto op = random_op(rng, 7, 5, 3);
  const auto back = op_from_record<double>(to_record(op));
  CHECK(back.selected() == op.selected());
  CHECK(back.slot_of() == op.slot_of());
  CHECK(back.gains().re == op.gains().re);
  CHECK(back.gains().im == op.gains().im);
  CHECK_THROWS_AS(op_from_record<double>("3 3 2\n0 0 1 0\n"), FormatError);
}

TEST_CASE("float scalar instantiation") {
  const auto op = MaskedChannelOp<float>::mask(3, 3, {2}, {1});
  const Eigen::VectorXf x = Eigen::VectorXf::Constant(3, 2.0f);
  CHECK(range_project(op, x) == Eigen::Vector3f(0, 2, 0));
}
