// Copyright 2026 The MMFDL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "mmfdl/autodiff.hpp"
#include "mmfdl/error.hpp"
#include "mmfdl/optim.hpp"
#include "mmfdl/rng.hpp"
#include "mmfdl/tensor.hpp"

using namespace mmfdl;
using namespace mmfdl::nn;

namespace {

Tensor random_tensor(std::size_t rows, std::size_t cols, Rng& rng, double min_abs = 0.0) {
  Tensor t({rows, cols});
  for (std::size_t i = 0; i < t.size(); ++i) {
    double v = rng.uniform(-1.0, 1.0);
    if (std::abs(v) < min_abs) v = v < 0 ? v - min_abs : v + min_abs;
    t[i] = v;
  }
  return t;
}

// Weighted sum so every output entry carries a distinct gradient.
Var project(Var x, const Tensor& weights) { return sum(mul(x, x.tape->constant(weights))); }

double check(std::vector<Parameter*> params, const std::function<Var(Tape&)>& f) {
  Rng rng(99);
  return gradient_check(f, params, rng, 40);
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an mmfdl::Error");
  return Errc::kIo;
}

}  // namespace

TEST_CASE("forward values of core ops") {
  Tape tape;
  const Tensor x = Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6});
  const Tensor eye = Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  CHECK(matmul(tape.constant(eye), tape.constant(x)).value() == x);

  const Var r = relu(tape.constant(Tensor::row({-1.0, 2.0})));
  CHECK(r.value() == Tensor::row({0.0, 2.0}));

  const Var b = add(tape.constant(x), tape.constant(Tensor::row({10, 20})));
  CHECK(b.value() == Tensor::matrix(3, 2, {11, 22, 13, 24, 15, 26}));
  CHECK(transpose(tape.constant(x)).value() == Tensor::matrix(2, 3, {1, 3, 5, 2, 4, 6}));
  CHECK(mean_pool_rows(tape.constant(x)).value() == Tensor::row({3, 4}));
  CHECK(sum(tape.constant(x)).item() == 21.0);
  CHECK(slice_rows(tape.constant(x), 1, 2).value() == Tensor::matrix(2, 2, {3, 4, 5, 6}));
  CHECK(slice_cols(tape.constant(x), 1, 1).value() == Tensor::matrix(3, 1, {2, 4, 6}));
}

TEST_CASE("relu gradient mask and sum of squares gradient") {
  Parameter p("x", Tensor::row({-1.0, 2.0}));
  {
    Tape tape;
    tape.backward(sum(relu(tape.parameter(p))));
  }
  CHECK(p.grad == Tensor::row({0.0, 1.0}));

  Parameter q("x", Tensor::row({1.0, 2.0}));
  {
    Tape tape;
    const Var x = tape.parameter(q);
    tape.backward(sum(mul(x, x)));
  }
  CHECK(q.grad == Tensor::row({2.0, 4.0}));
}

TEST_CASE("shape mismatch names both shapes") {
  Tape tape;
  const Var a = tape.constant(Tensor({2, 3}));
  const Var b = tape.constant(Tensor({2, 3}));
  try {
    matmul(a, b);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kShapeMismatch);
    CHECK(std::string(e.what()).find("[2, 3]") != std::string::npos);
  }
  CHECK(code_of([&] { add(a, tape.constant(Tensor({3, 2}))); }) == Errc::kShapeMismatch);
}

TEST_CASE("softmax examples") {
  Tape tape;
  CHECK(softmax_rows(tape.constant(Tensor::row({0.0, 0.0}))).value() == Tensor::row({0.5, 0.5}));
  const Tensor s = softmax_rows(tape.constant(Tensor::row({std::log(1.0), std::log(3.0)}))).value();
  CHECK(s[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(s[1] == doctest::Approx(0.75).epsilon(1e-15));

  Rng rng(3);
  const Tensor x = random_tensor(4, 7, rng);
  Tensor shifted = x;
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += 123.0;
  const Tensor a = softmax_rows(tape.constant(x)).value();
  const Tensor b = softmax_rows(tape.constant(shifted)).value();
  for (std::size_t r = 0; r < 4; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < 7; ++c) {
      CHECK(a.at(r, c) >= 0.0);
      CHECK(a.at(r, c) == doctest::Approx(b.at(r, c)).epsilon(1e-12));
      total += a.at(r, c);
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }

  const bool valid[] = {true, false, true};
  const Tensor m = softmax_rows(tape.constant(Tensor::row({0.0, 5.0, 0.0})), valid).value();
  CHECK(m == Tensor::row({0.5, 0.0, 0.5}));

  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK(code_of([&] { softmax_rows(tape.constant(Tensor::row({0.0, nan}))); }) ==
        Errc::kNonFiniteInput);
}

TEST_CASE("positional encoding") {
  const Tensor pe = positional_encoding(10, 8);
  for (std::size_t c = 0; c < 8; ++c) CHECK(pe.at(0, c) == (c % 2 == 0 ? 0.0 : 1.0));
  CHECK(pe.at(1, 0) == doctest::Approx(0.841470984807897).epsilon(1e-14));
  CHECK(positional_encoding(3, 2).at(1, 0) == pe.at(1, 0));
  // i = 1 with d = 8: frequency 10000^(-2/8) = 0.1
  CHECK(pe.at(3, 2) == doctest::Approx(std::sin(0.3)).epsilon(1e-14));
  CHECK(pe.at(3, 3) == doctest::Approx(std::cos(0.3)).epsilon(1e-14));
  for (std::size_t i = 0; i < pe.size(); ++i) CHECK(std::abs(pe[i]) <= 1.0);
  CHECK(code_of([] { positional_encoding(4, 5); }) == Errc::kOddDimension);
}

TEST_CASE("layer norm") {
  Tape tape;
  const Var gain = tape.constant(Tensor::row({1.0, 1.0}));
  const Var bias = tape.constant(Tensor::row({0.0, 0.0}));
  const Tensor y = layer_norm(tape.constant(Tensor::row({1.0, 3.0})), gain, bias).value();
  CHECK(y[0] == doctest::Approx(-1.0).epsilon(1e-5));
  CHECK(y[1] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(layer_norm(tape.constant(Tensor::row({4.0, 4.0})), gain, bias).value() ==
        Tensor::row({0.0, 0.0}));

  Rng rng(5);
  const std::size_t d = 16;
  const Tensor x = random_tensor(3, d, rng);
  const Tensor out = layer_norm(tape.constant(x), tape.constant(Tensor({1, d}, 1.0)),
                                tape.constant(Tensor({1, d}, 0.0)))
                         .value();
  for (std::size_t r = 0; r < 3; ++r) {
    double mean = 0.0;
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) mean += out.at(r, c) / d;
    for (std::size_t c = 0; c < d; ++c) var += (out.at(r, c) - mean) * (out.at(r, c) - mean) / d;
    CHECK(std::abs(mean) < 1e-12);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
  }
  const Tensor huge = layer_norm(tape.constant(Tensor::row({1e300, -1e300})), gain, bias).value();
  CHECK(huge.all_finite());
}

TEST_CASE("gradient check of each op in isolation") {
  Rng rng(11);
  Parameter a("a", random_tensor(3, 4, rng, 0.05));
  Parameter b("b", random_tensor(4, 2, rng));
  Parameter c("c", random_tensor(3, 4, rng));
  Parameter row("row", random_tensor(1, 4, rng));
  const Tensor w34 = random_tensor(3, 4, rng);
  const Tensor w32 = random_tensor(3, 2, rng);
  const Tensor w43 = random_tensor(4, 3, rng);
  const Tensor w14 = random_tensor(1, 4, rng);

  SUBCASE("matmul") {
    CHECK(check({&a, &b}, [&](Tape& t) { return project(matmul(t.parameter(a), t.parameter(b)), w32); }) < 1e-6);
  }
  SUBCASE("add with broadcast") {
    CHECK(check({&a, &row}, [&](Tape& t) { return project(add(t.parameter(a), t.parameter(row)), w34); }) < 1e-6);
  }
  SUBCASE("sub and mul") {
    CHECK(check({&a, &c}, [&](Tape& t) {
      const Var x = t.parameter(a);
      const Var y = t.parameter(c);
      return project(mul(sub(x, y), x), w34);
    }) < 1e-6);
  }
  SUBCASE("affine") {
    CHECK(check({&a}, [&](Tape& t) { return project(affine(t.parameter(a), -2.5, 0.3), w34); }) < 1e-6);
  }
  SUBCASE("concat and slice") {
    CHECK(check({&a, &c}, [&](Tape& t) {
      const Var parts[] = {t.parameter(a), t.parameter(c)};
      const Var rows = concat_rows(parts);
      const Var cols = concat_cols(parts);
      return add(project(slice_rows(rows, 2, 3), w34), project(slice_cols(cols, 3, 4), w34));
    }) < 1e-6);
  }
  SUBCASE("transpose") {
    CHECK(check({&a}, [&](Tape& t) { return project(transpose(t.parameter(a)), w43); }) < 1e-6);
  }
  SUBCASE("relu away from the kink") {
    CHECK(check({&a}, [&](Tape& t) { return project(relu(t.parameter(a)), w34); }) < 1e-6);
  }
  SUBCASE("tanh and sigmoid") {
    CHECK(check({&a}, [&](Tape& t) { return project(tanh(sigmoid(t.parameter(a))), w34); }) < 1e-6);
  }
  SUBCASE("mean pool") {
    CHECK(check({&a}, [&](Tape& t) { return project(mean_pool_rows(t.parameter(a)), w14); }) < 1e-6);
  }
  SUBCASE("softmax with mask") {
    const bool valid[] = {true, false, true, true};
    CHECK(check({&a}, [&](Tape& t) { return project(softmax_rows(t.parameter(a), valid), w34); }) < 1e-6);
  }
  SUBCASE("layer norm") {
    Parameter gain("gain", random_tensor(1, 4, rng));
    Parameter bias("bias", random_tensor(1, 4, rng));
    CHECK(check({&a, &gain, &bias}, [&](Tape& t) {
      return project(layer_norm(t.parameter(a), t.parameter(gain), t.parameter(bias)), w34);
    }) < 1e-5);
  }
  SUBCASE("gather rows") {
    const std::int32_t ids[] = {2, 0, 2};
    CHECK(check({&a}, [&](Tape& t) { return project(gather_rows(t.parameter(a), ids), w34); }) < 1e-6);
  }
  SUBCASE("mse") {
    const Tensor target = random_tensor(3, 4, rng);
    CHECK(check({&a}, [&](Tape& t) { return mse(t.parameter(a), target); }) < 1e-6);
  }
  SUBCASE("dropout with a replayed mask") {
    CHECK(check({&a}, [&](Tape& t) {
      Rng mask_rng(17);
      return project(dropout(t.parameter(a), 0.3, &mask_rng), w34);
    }) < 1e-6);
  }
}

TEST_CASE("gradient_check on an exact quadratic") {
  Rng rng(1);
  Parameter x("x", random_tensor(5, 5, rng));
  Parameter* params[] = {&x};
  const double err = gradient_check(
      [&](Tape& t) {
        const Var v = t.parameter(x);
        return sum(mul(v, v));
      },
      params, rng);
  CHECK(err < 1e-7);
}

TEST_CASE("dropout scaling and identity") {
  Tape tape;
  const Tensor ones({200, 50}, 1.0);
  CHECK(dropout(tape.constant(ones), 0.5, nullptr).value() == ones);
  Rng rng(4);
  const Tensor d = dropout(tape.constant(ones), 0.5, &rng).value();
  std::size_t kept = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK((d[i] == 0.0 || d[i] == 2.0));
    kept += d[i] != 0.0;
  }
  CHECK(kept > 4500);
  CHECK(kept < 5500);
}

TEST_CASE("adam examples") {
  Parameter p("p", Tensor::row({1.0, -2.0, 3.0}));
  Parameter* params[] = {&p};
  AdamState state;
  zero_grads(params);
  adam_step(params, state);
  CHECK(p.value == Tensor::row({1.0, -2.0, 3.0}));

  Parameter q("q", Tensor::row({1.0, -2.0, 3.0}));
  Parameter* qs[] = {&q};
  AdamState fresh;
  q.grad = Tensor::row({0.5, -4.0, 1e-3});
  adam_step(qs, fresh);
  CHECK(q.value[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-8));
  CHECK(q.value[1] == doctest::Approx(-2.0 + 1e-3).epsilon(1e-8));
  CHECK(q.value[2] == doctest::Approx(3.0 - 1e-3).epsilon(1e-7));
  CHECK(fresh.m.size() == 1);
  CHECK(fresh.m[0].same_shape(q.value));

  Parameter x("x", Tensor::row({5.0, -5.0}));
  Parameter* xs[] = {&x};
  AdamState conv;
  conv.config.lr = 0.1;
  for (int step = 0; step < 200; ++step) {
    zero_grads(xs);
    Tape tape;
    const Var v = tape.parameter(x);
    tape.backward(sum(mul(v, v)));
    adam_step(xs, conv);
  }
  CHECK(std::hypot(x.value[0], x.value[1]) < 0.5);

  q.grad[0] = std::numeric_limits<double>::infinity();
  const Tensor before = q.value;
  CHECK(code_of([&] { adam_step(qs, fresh); }) == Errc::kNonFiniteGradient);
  CHECK(q.value == before);
}

TEST_CASE("rng determinism and splitting") {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(43);
  CHECK(Rng(42).next_u64() != c.next_u64());
  CHECK(Rng(42).split(1).next_u64() != Rng(42).split(2).next_u64());
  CHECK(Rng(42).split(1).next_u64() == Rng(42).split(1).next_u64());

  Rng r(7);
  std::vector<int> counts(6, 0);
  double mean = 0.0;
  double sq = 0.0;
  const int n = 60000;
  for (int i = 0; i < n; ++i) {
    ++counts[r.uniform_index(6)];
    const double u = r.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    const double z = r.normal();
    mean += z / n;
    sq += z * z / n;
  }
  for (int k : counts) CHECK(std::abs(k - n / 6) < 600);
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(sq - 1.0) < 0.03);
}

TEST_CASE("uniform init bounds") {
  Rng rng(8);
  const Tensor w = uniform_init({16, 4}, 16, rng);
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(w[i]) <= 0.25);
}

TEST_CASE("checkpoint round trip and validation") {
  const auto path = std::filesystem::temp_directory_path() / "mmfdl_numcore_ckpt.bin";
  Rng rng(2);
  Parameter w("tf.w", random_tensor(3, 5, rng));
  Parameter s("tf.s", Tensor::scalar(2.5));
  Parameter* params[] = {&w, &s};
  const auto snap = snapshot(params);
  save_checkpoint(path, snap);

  std::ifstream in(path, std::ios::binary);
  char magic[4];
  std::uint32_t version = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  CHECK(std::string(magic, 4) == "MMFD");
  CHECK(version == 1);
  in.close();

  const auto loaded = load_checkpoint(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].name == "tf.w");
  CHECK(loaded[0].tensor == w.value);
  CHECK(loaded[1].tensor == s.value);

  Parameter w2("tf.w", Tensor({3, 5}));
  Parameter s2("tf.s", Tensor::scalar(0.0));
  Parameter* fresh[] = {&w2, &s2};
  restore(fresh, loaded);
  CHECK(w2.value == w.value);

  Parameter wrong("tf.w", Tensor({5, 3}));
  Parameter* bad[] = {&wrong};
  CHECK(code_of([&] { restore(bad, loaded); }) == Errc::kBadCheckpoint);

  std::ofstream(path, std::ios::binary) << "JUNKJUNK";
  CHECK(code_of([&] { load_checkpoint(path); }) == Errc::kBadCheckpoint);
  std::filesystem::remove(path);
}
