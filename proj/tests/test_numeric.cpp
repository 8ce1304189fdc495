#include <doctest.h>

#include <cstring>
#include <random>
#include <sstream>

#include "morphoqg/checkpoint.hpp"
#include "morphoqg/grad_check.hpp"
#include "support.hpp"

using namespace morphoqg;

namespace {

template <typename Rng>
Tensor<double> random_tensor(std::vector<std::size_t> dims, Rng& rng) {
  Tensor<double> t(std::move(dims));
  init_uniform(t, 1.0, rng);
  return t;
}

}  // namespace

TEST_SUITE("numeric") {

TEST_CASE("softmax") {
  const std::vector<double> zeros = {0.0, 0.0, 0.0};
  for (double p : ops::softmax<double>(zeros)) CHECK(p == doctest::Approx(1.0 / 3.0));
  const std::vector<double> big = {1000.0, -1000.0, 999.0};
  const auto y = ops::softmax<double>(big);
  double sum = 0.0;
  for (double p : y) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    sum += p;
  }
  CHECK(std::abs(sum - 1.0) < 1e-12);
}

TEST_CASE("maxout tie sends the gradient to the first piece") {
  const std::vector<double> x = {0.5, 0.5, -1.0, 2.0};
  std::vector<std::size_t> arg;
  const auto y = ops::maxout<double>(x, 2, arg);
  CHECK(y == std::vector<double>{0.5, 2.0});
  std::vector<double> dx(4, 0.0);
  const std::vector<double> dy = {1.0, 1.0};
  ops::maxout_backward<double>(dy, arg, dx);
  CHECK(dx == std::vector<double>{1.0, 0.0, 0.0, 1.0});
  const std::vector<double> odd = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(ops::maxout<double>(odd, 2, arg), ShapeMismatch);
}

TEST_CASE("dropout") {
  const std::vector<double> x = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0};
  std::mt19937_64 rng(1);
  std::vector<double> mask;
  CHECK(ops::dropout<double>(x, 0.0, rng, mask) == x);
  std::mt19937_64 a(9), b(9);
  std::vector<double> ma, mb;
  const auto ya = ops::dropout<double>(x, 0.5, a, ma);
  const auto yb = ops::dropout<double>(x, 0.5, b, mb);
  CHECK(ma == mb);
  CHECK(ya == yb);
  for (double m : ma) CHECK((m == 0.0 || m == 2.0));
}

TEST_CASE("matmul gradient against central differences") {
  std::mt19937_64 rng(5);
  ParameterStore<double> store;
  store.add("a", random_tensor({5, 4}, rng));
  store.add("b", random_tensor({4, 3}, rng));
  const Tensor<double> weights = random_tensor({5, 3}, rng);
  auto f = [&](ParameterStore<double>& s, bool with_grad) {
    const auto c = ops::matmul(s.value("a"), s.value("b"));
    double loss = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) loss += weights[i] * c[i] * c[i];
    if (with_grad) {
      Tensor<double> dc(c.dims());
      for (std::size_t i = 0; i < c.size(); ++i) dc[i] = 2.0 * weights[i] * c[i];
      ops::matmul_backward(s.value("a"), s.value("b"), dc, s.grad("a"), s.grad("b"));
    }
    return loss;
  };
  const auto r = grad_check(store, f, 1e-5, 1e-6);
  CHECK(r.passed());
  CHECK(r.max_relative_error() < 1e-6);
}

TEST_CASE("elementwise and pooling backward passes") {
  std::mt19937_64 rng(11);
  ParameterStore<double> store;
  store.add("x", random_tensor({4, 3}, rng));
  store.add("e", random_tensor({5, 6}, rng));
  const Tensor<double> w = random_tensor({12}, rng);
  auto f = [&](ParameterStore<double>& s, bool with_grad) {
    const auto& x = s.value("x");
    auto pooled = ops::mean_rows(x, 1, 3);                            // 3
    const auto emb = ops::embedding(s.value("e"), 2);                 // 6
    std::vector<std::size_t> arg;
    const auto mo = ops::maxout<double>(emb, 2, arg);                 // 3
    auto cat = ops::concat<double>({pooled, mo});                     // 6
    auto t = cat;
    ops::tanh_inplace<double>(t);
    auto sg = cat;
    ops::sigmoid_inplace<double>(sg);
    const auto sm = ops::softmax<double>(ops::add<double>(t, sg));    // 6
    double loss = 0.0;
    for (std::size_t i = 0; i < 6; ++i) loss += w[i] * sm[i] + w[6 + i] * t[i];
    if (with_grad) {
      std::vector<double> dsm(w.values().begin(), w.values().begin() + 6), dsum(6, 0.0);
      ops::softmax_backward<double>(sm, dsm, dsum);
      std::vector<double> dt(dsum), dcat(6, 0.0);
      for (std::size_t i = 0; i < 6; ++i) dt[i] += w[6 + i];
      ops::tanh_backward<double>(t, dt, dcat);
      ops::sigmoid_backward<double>(sg, dsum, dcat);
      std::vector<double> dpool(3, 0.0), dmo(3, 0.0), demb(6, 0.0);
      ops::concat_backward<double>(dcat, {std::span<double>(dpool), std::span<double>(dmo)});
      ops::maxout_backward<double>(dmo, arg, demb);
      ops::embedding_backward<double>(demb, 2, s.grad("e"));
      ops::mean_rows_backward<double>(dpool, 1, 3, s.grad("x"));
    }
    return loss;
  };
  const auto r = grad_check(store, f);
  for (const auto& e : r.entries) CHECK_MESSAGE(e.passed, e.name << " " << e.relative_error);
}

TEST_CASE("grad_check: linear function and negative control") {
  std::mt19937_64 rng(2);
  ParameterStore<double> store;
  store.add("w", random_tensor({6}, rng));
  const Tensor<double> c = random_tensor({6}, rng);
  auto linear = [&](ParameterStore<double>& s, bool with_grad) {
    if (with_grad) s.grad("w") = c;
    return ops::dot<double>(s.value("w").span(), c.span());
  };
  const auto ok = grad_check(store, linear);
  CHECK(ok.passed());
  CHECK(ok.max_relative_error() < 1e-9);

  auto corrupted = [&](ParameterStore<double>& s, bool with_grad) {
    if (with_grad) {
      s.grad("w") = c;
      s.grad("w")[3] *= 1.5;
    }
    return ops::dot<double>(s.value("w").span(), c.span());
  };
  const auto bad = grad_check(store, corrupted);
  CHECK_FALSE(bad.passed());
}

TEST_CASE("shape errors name both shapes") {
  const Tensor<double> a({2, 3}), b({4, 5});
  try {
    ops::matmul(a, b);
    FAIL("expected ShapeMismatch");
  } catch (const ShapeMismatch& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("[4x5]") != std::string::npos);
  }
  CHECK_THROWS_AS(Tensor<double>({2, 2}, std::vector<double>{1.0}), ShapeMismatch);
}

TEST_CASE("Adam and clipping") {
  ParameterStore<double> s;
  s.add("w", Tensor<double>::vector({1.0, -1.0}));
  s.grad("w") = Tensor<double>::vector({30.0, 40.0});
  CHECK(clip_grad_norm(s, 5.0) == doctest::Approx(50.0));
  CHECK(s.grad("w")[0] == doctest::Approx(3.0));
  CHECK(s.grad("w")[1] == doctest::Approx(4.0));
  Adam<double> adam({0.1});
  adam.step(s);
  // First Adam step moves each weight by lr against the gradient sign.
  CHECK(s.value("w")[0] == doctest::Approx(0.9));
  CHECK(s.value("w")[1] == doctest::Approx(-1.1));
}

TEST_CASE("checkpoint format") {
  ParameterStore<float> s;
  s.add("b", Tensor<float>::vector({1.0f, -2.5f}));
  s.add("a", Tensor<float>({1, 1}, std::vector<float>{0.5f}));
  std::ostringstream os;
  write_checkpoint(os, s);
  const std::string bytes = os.str();

  std::string want = "MQG1";
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) want.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  auto f32 = [&](float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    u32(v);
  };
  u32(2);
  u32(1), want += "a", u32(2), u32(1), u32(1), f32(0.5f);
  u32(1), want += "b", u32(1), u32(2), f32(1.0f), f32(-2.5f);
  CHECK(bytes == want);

  std::istringstream is(bytes);
  const auto back = read_checkpoint(is);
  CHECK(back.value("a") == s.value("a"));
  CHECK(back.value("b") == s.value("b"));

  std::istringstream truncated(bytes.substr(0, bytes.size() - 2));
  CHECK_THROWS_AS(read_checkpoint(truncated), DataError);
  std::istringstream bad_magic("XXXX" + bytes.substr(4));
  CHECK_THROWS_AS(read_checkpoint(bad_magic), DataError);
}

}  // TEST_SUITE
