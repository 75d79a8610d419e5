#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "satpose/core/checkpoint.hpp"
#include "satpose/core/nn.hpp"
#include "satpose/core/optim.hpp"
#include "satpose/net/anchors.hpp"
#include "satpose/util/errors.hpp"
#include "satpose/util/fsutil.hpp"
#include "satpose/util/rng.hpp"
#include "satpose/util/thread_pool.hpp"

using namespace satpose;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = false, double scale = 1.0) {
  std::vector<real> data(static_cast<std::size_t>(numel_of(shape)));
  for (auto& v : data) v = static_cast<real>(rng.normal(0.0, scale));
  return Tensor::from_data(std::move(shape), std::move(data), requires_grad);
}

std::filesystem::path temp_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / "satpose_test" / name;
  std::filesystem::remove_all(dir);
  ensure_dir(dir);
  return dir;
}

}  // namespace

TEST_CASE("backward of sum fills ones") {
  Rng rng(1);
  Tensor x = random_tensor({3, 4}, rng, true);
  Tensor loss = sum(x);
  std::vector<Tensor> params{x};
  backward(loss, params);
  for (const real g : x.grad()) CHECK(g == real(1));
}

TEST_CASE("unreachable parameters get zero gradients") {
  Rng rng(2);
  Tensor x = random_tensor({5}, rng, true);
  Tensor unused = random_tensor({7}, rng, true);
  Tensor loss = sum(mul(x, x));
  std::vector<Tensor> params{x, unused};
  backward(loss, params);
  for (const real g : unused.grad()) CHECK(g == real(0));
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(x.grad()[i] == doctest::Approx(2.0 * x.data()[i]));
  }
}

TEST_CASE("backward twice accumulates exactly 2x") {
  Rng rng(3);
  Tensor x = random_tensor({4, 4}, rng, true);
  Tensor w = random_tensor({2, 4, 3, 3}, rng, true, 0.3);
  // keep the graph alive between the two sweeps
  Tensor img = reshape(x, {1, 1, 4, 4});
  Tensor y = conv2d(reshape(x, {1, 1, 4, 4}), random_tensor({1, 1, 3, 3}, rng, false), {}, 1, 1);
  Tensor loss = sum(mul(y, y));
  std::vector<Tensor> params{x};
  backward(loss, params);
  const std::vector<real> once(x.grad().begin(), x.grad().end());
  backward(loss, params);
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(x.grad()[i] == once[i] * real(2));  // bitwise doubling
  }
  (void)w;
  (void)img;
}

TEST_CASE("backward rejects non-scalar losses") {
  Rng rng(4);
  Tensor x = random_tensor({3}, rng, true);
  CHECK_THROWS_AS(backward(x), NumericalError);
}

TEST_CASE("conv2d matches the direct-loop oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = rng.uniform_int(1, 2), cin = rng.uniform_int(1, 4), cout = rng.uniform_int(1, 4);
    const int h = rng.uniform_int(3, 9), w = rng.uniform_int(3, 9);
    const int stride = rng.uniform_int(1, 2), pad = rng.uniform_int(0, 1);
    const int k = 3;
    if ((h + 2 * pad - k) / stride + 1 <= 0 || (w + 2 * pad - k) / stride + 1 <= 0) continue;
    Tensor x = random_tensor({n, cin, h, w}, rng);
    Tensor weight = random_tensor({cout, cin, k, k}, rng);
    Tensor bias = random_tensor({cout}, rng);
    Tensor fast = conv2d(x, weight, bias, stride, pad);
    const auto direct =
        conv2d_direct(x.data(), x.shape(), weight.data(), weight.shape(), bias.data(), stride, pad);
    REQUIRE(direct.size() == static_cast<std::size_t>(fast.numel()));
    for (std::size_t i = 0; i < direct.size(); ++i) {
      CHECK(fast.data()[i] == doctest::Approx(direct[i]).epsilon(1e-5));
    }
  }
}

TEST_CASE("conv2d identity kernel and zero weights") {
  Rng rng(6);
  Tensor x = random_tensor({1, 1, 5, 7}, rng);
  Tensor ident = Tensor::from_data({1, 1, 1, 1}, {real(1)});
  Tensor y = conv2d(x, ident, {}, 1, 0);
  for (std::size_t i = 0; i < x.data().size(); ++i) CHECK(y.data()[i] == x.data()[i]);

  Tensor zeros = Tensor::zeros({3, 1, 3, 3});
  Tensor z = conv2d(x, zeros, {}, 1, 1);
  for (const real v : z.data()) CHECK(v == real(0));
}

TEST_CASE("conv2d output geometry and validation") {
  Rng rng(7);
  Tensor x = random_tensor({1, 2, 10, 8}, rng);
  Tensor w = random_tensor({4, 2, 3, 3}, rng);
  Tensor y = conv2d(x, w, {}, 2, 1);
  CHECK(y.shape() == Shape{1, 4, 5, 4});  // floor((10+2-3)/2)+1 = 5

  Tensor bad_w = random_tensor({4, 3, 3, 3}, rng);
  CHECK_THROWS_AS(conv2d(x, bad_w, {}, 1, 1), ShapeError);
  Tensor even_k = random_tensor({4, 2, 2, 2}, rng);
  CHECK_THROWS_AS(conv2d(x, even_k, {}, 1, 1), ShapeError);
}

TEST_CASE("conv2d is bitwise stable across worker counts") {
  Rng rng(8);
  Tensor x = random_tensor({4, 3, 12, 12}, rng);
  Tensor w = random_tensor({8, 3, 3, 3}, rng);
  set_worker_threads(1);
  Tensor serial = conv2d(x, w, {}, 1, 1);
  set_worker_threads(4);
  Tensor parallel = conv2d(x, w, {}, 1, 1);
  set_worker_threads(0);
  for (std::size_t i = 0; i < serial.data().size(); ++i) {
    CHECK(serial.data()[i] == parallel.data()[i]);
  }
}

TEST_CASE("batch_norm train mode statistics") {
  Rng rng(9);
  const int n = 4, c = 3, h = 5, w = 5;
  NormLayerState st = NormLayerState::batch_norm(c);
  Tensor x = random_tensor({n, c, h, w}, rng, false, 2.0);
  Tensor y = batch_norm(x, st, NormMode::Train);

  // pre-affine output (gamma=1, beta=0) has mean ~0 and var ~1 per channel
  for (int ci = 0; ci < c; ++ci) {
    double mean = 0, var = 0;
    const std::int64_t count = static_cast<std::int64_t>(n) * h * w;
    for (int ni = 0; ni < n; ++ni) {
      for (int i = 0; i < h * w; ++i) {
        mean += y.data()[(static_cast<std::size_t>(ni) * c + ci) * h * w + i];
      }
    }
    mean /= static_cast<double>(count);
    for (int ni = 0; ni < n; ++ni) {
      for (int i = 0; i < h * w; ++i) {
        const double d = y.data()[(static_cast<std::size_t>(ni) * c + ci) * h * w + i] - mean;
        var += d * d;
      }
    }
    var /= static_cast<double>(count);
    CHECK(std::abs(mean) < 1e-5);
    CHECK(std::abs(var - 1.0) < 1e-4);
  }
}

TEST_CASE("batch_norm constant input gives beta") {
  NormLayerState st = NormLayerState::batch_norm(2, 1e-12);
  st.beta.data()[0] = real(3);
  st.beta.data()[1] = real(-1);
  Tensor x = Tensor::full({2, 2, 4, 4}, real(5));
  Tensor y = batch_norm(x, st, NormMode::Train);
  for (int ni = 0; ni < 2; ++ni) {
    for (int ci = 0; ci < 2; ++ci) {
      for (int i = 0; i < 16; ++i) {
        CHECK(y.data()[(static_cast<std::size_t>(ni) * 2 + ci) * 16 + i] ==
              doctest::Approx(ci == 0 ? 3.0 : -1.0).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("batch_norm normalized input passes through") {
  // data constructed with exact zero mean / unit (biased) variance
  NormLayerState st = NormLayerState::batch_norm(1, 1e-12);
  std::vector<real> vals;
  Rng rng(10);
  for (int i = 0; i < 32; ++i) vals.push_back(static_cast<real>(rng.normal()));
  double m = 0;
  for (const real v : vals) m += v;
  m /= vals.size();
  double var = 0;
  for (const real v : vals) var += (v - m) * (v - m);
  var /= vals.size();
  for (auto& v : vals) v = static_cast<real>((v - m) / std::sqrt(var));
  Tensor x = Tensor::from_data({2, 1, 4, 4}, vals);
  Tensor y = batch_norm(x, st, NormMode::Train);
  for (std::size_t i = 0; i < vals.size(); ++i) {
    CHECK(std::abs(y.data()[i] - x.data()[i]) < 1e-5);
  }
}

TEST_CASE("batch_norm eval mode is an affine map of the input") {
  Rng rng(11);
  NormLayerState st = NormLayerState::batch_norm(2);
  // push the running stats away from the init
  for (int i = 0; i < 3; ++i) {
    Tensor warm = random_tensor({4, 2, 6, 6}, rng, false, 2.0);
    batch_norm(warm, st, NormMode::Train);
  }
  const auto frozen_mean = st.running_mean;
  const auto frozen_var = st.running_var;

  Tensor x = random_tensor({2, 2, 6, 6}, rng);
  Tensor y = batch_norm(x, st, NormMode::Eval);
  CHECK(st.running_mean == frozen_mean);  // eval never touches the stats
  for (int ci = 0; ci < 2; ++ci) {
    const double scale = st.gamma.data()[static_cast<std::size_t>(ci)] /
                         std::sqrt(frozen_var[static_cast<std::size_t>(ci)] + st.eps);
    const double shift = st.beta.data()[static_cast<std::size_t>(ci)] -
                         frozen_mean[static_cast<std::size_t>(ci)] * scale;
    for (int ni = 0; ni < 2; ++ni) {
      for (int i = 0; i < 36; ++i) {
        const std::size_t idx = (static_cast<std::size_t>(ni) * 2 + ci) * 36 + i;
        CHECK(y.data()[idx] ==
              doctest::Approx(x.data()[idx] * scale + shift).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("batch_norm rejects bad inputs") {
  NormLayerState st = NormLayerState::batch_norm(2);
  CHECK_THROWS_AS(batch_norm(Tensor::zeros({0, 2, 3, 3}), st, NormMode::Train), ShapeError);
  st.running_var[0] = -1.0;
  CHECK_THROWS_AS(batch_norm(Tensor::zeros({1, 2, 3, 3}), st, NormMode::Eval), NumericalError);
}

TEST_CASE("group_norm matches a per-group scalar oracle") {
  Rng rng(12);
  const int n = 2, c = 8, h = 4, w = 3, groups = 4;
  Tensor x = random_tensor({n, c, h, w}, rng, false, 1.5);
  Tensor gamma = random_tensor({c}, rng);
  Tensor beta = random_tensor({c}, rng);
  Tensor y = group_norm(x, gamma, beta, groups, 1e-5);

  const int cpg = c / groups;
  for (int ni = 0; ni < n; ++ni) {
    for (int g = 0; g < groups; ++g) {
      double mean = 0, var = 0;
      const int count = cpg * h * w;
      for (int cc = 0; cc < cpg; ++cc) {
        for (int i = 0; i < h * w; ++i) {
          mean += x.data()[((static_cast<std::size_t>(ni) * c) + g * cpg + cc) * h * w + i];
        }
      }
      mean /= count;
      for (int cc = 0; cc < cpg; ++cc) {
        for (int i = 0; i < h * w; ++i) {
          const double d =
              x.data()[((static_cast<std::size_t>(ni) * c) + g * cpg + cc) * h * w + i] - mean;
          var += d * d;
        }
      }
      var /= count;
      for (int cc = 0; cc < cpg; ++cc) {
        const int ci = g * cpg + cc;
        for (int i = 0; i < h * w; ++i) {
          const std::size_t idx = ((static_cast<std::size_t>(ni) * c) + ci) * h * w + i;
          const double expect =
              (x.data()[idx] - mean) / std::sqrt(var + 1e-5) * gamma.data()[static_cast<std::size_t>(ci)] +
              beta.data()[static_cast<std::size_t>(ci)];
          CHECK(y.data()[idx] == doctest::Approx(expect).epsilon(1e-5));
        }
      }
    }
  }
  CHECK_THROWS_AS(group_norm(x, gamma, beta, 3, 1e-5), ShapeError);
}

TEST_CASE("group_norm is batch-agnostic") {
  Rng rng(13);
  const int c = 8, h = 6, w = 5;
  Tensor gamma = random_tensor({c}, rng);
  Tensor beta = random_tensor({c}, rng);
  Tensor batch = random_tensor({8, c, h, w}, rng);

  // the same sample alone vs inside the batch of 8
  const int pick = 3;
  std::vector<real> single_data(batch.data().begin() + pick * c * h * w,
                                batch.data().begin() + (pick + 1) * c * h * w);
  Tensor single = Tensor::from_data({1, c, h, w}, single_data);

  Tensor y_batch = group_norm(batch, gamma, beta, 4, 1e-5);
  Tensor y_single = group_norm(single, gamma, beta, 4, 1e-5);
  for (int i = 0; i < c * h * w; ++i) {
    CHECK(std::abs(y_batch.data()[static_cast<std::size_t>(pick) * c * h * w + i] -
                   y_single.data()[static_cast<std::size_t>(i)]) < 1e-6);
  }

  // constant input -> beta
  Tensor constant = Tensor::full({1, c, h, w}, real(7));
  Tensor y_const = group_norm(constant, gamma, beta, 4, 1e-5);
  for (int ci = 0; ci < c; ++ci) {
    for (int i = 0; i < h * w; ++i) {
      CHECK(y_const.data()[static_cast<std::size_t>(ci) * h * w + i] ==
            doctest::Approx(beta.data()[static_cast<std::size_t>(ci)]).epsilon(1e-4));
    }
  }
}

TEST_CASE("pooling and upsampling") {
  Tensor x = Tensor::from_data({1, 1, 2, 4}, {1, 5, 2, 0, 3, 4, 1, 7});
  Tensor pooled = max_pool2x2(x);
  CHECK(pooled.shape() == Shape{1, 1, 1, 2});
  CHECK(pooled.data()[0] == real(5));
  CHECK(pooled.data()[1] == real(7));

  Tensor up = upsample_nearest2x(pooled);
  CHECK(up.shape() == Shape{1, 1, 2, 4});
  CHECK(up.data()[0] == real(5));
  CHECK(up.data()[3] == real(7));
}

TEST_CASE("adamw trivial updates") {
  // zero gradient, zero weight decay: parameters unchanged
  Tensor p = Tensor::from_data({3}, {1, -2, 3}, true);
  p.grad();
  AdamW opt({p}, {1e-2, 0.9, 0.999, 1e-8, 0.0});
  opt.step();
  CHECK(p.data()[0] == real(1));
  CHECK(p.data()[1] == real(-2));
  CHECK(opt.step_count() == 1);

  // zero gradient with decay lambda scales by (1 - lr*lambda)
  Tensor q = Tensor::from_data({2}, {2, -4}, true);
  q.grad();
  AdamW opt2({q}, {0.1, 0.9, 0.999, 1e-8, 0.5});
  opt2.step();
  CHECK(q.data()[0] == doctest::Approx(2.0 * (1.0 - 0.1 * 0.5)).epsilon(1e-7));
  CHECK(q.data()[1] == doctest::Approx(-4.0 * (1.0 - 0.1 * 0.5)).epsilon(1e-7));
}

TEST_CASE("adamw single step matches the hand-computed update") {
  Tensor p = Tensor::from_data({1}, {real(0.5)}, true);
  p.grad()[0] = real(0.2);
  const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8, wd = 0.01;
  AdamW opt({p}, {lr, b1, b2, eps, wd});
  opt.step();
  // hand-computed single AdamW step
  const double m = (1 - b1) * 0.2;
  const double v = (1 - b2) * 0.2 * 0.2;
  const double mhat = m / (1 - b1);
  const double vhat = v / (1 - b2);
  const double expect = 0.5 * (1 - lr * wd) - lr * mhat / (std::sqrt(vhat) + eps);
  CHECK(p.data()[0] == doctest::Approx(expect).epsilon(1e-7));
}

TEST_CASE("checkpoint round trip is byte-exact") {
  const auto dir = temp_dir("ckpt");
  Checkpoint ckpt;
  ckpt.meta_json = R"({"note":"x","value":1.5})";
  Rng rng(14);
  for (int i = 0; i < 3; ++i) {
    CheckpointTensor t;
    t.name = "tensor_" + std::to_string(i);
    t.role = i == 0 ? "encoder-norm-affine" : "head";
    t.shape = {2, 3};
    for (int j = 0; j < 6; ++j) t.data.push_back(static_cast<float>(rng.normal()));
    ckpt.tensors.push_back(std::move(t));
  }
  ckpt.save(dir / "a.ckpt");
  const Checkpoint loaded = Checkpoint::load(dir / "a.ckpt");
  loaded.save(dir / "b.ckpt");
  CHECK(read_binary_file(dir / "a.ckpt") == read_binary_file(dir / "b.ckpt"));
  REQUIRE(loaded.tensors.size() == 3);
  CHECK(loaded.tensors[0].data == ckpt.tensors[0].data);
  CHECK(loaded.find("tensor_2") != nullptr);
  CHECK(loaded.find("nope") == nullptr);
}

TEST_CASE("anchor encode/decode inverse") {
  ArchConfig cfg;
  const AnchorSet anchors = build_anchors(cfg);
  CHECK(anchors.total() == (24 * 16 + 12 * 8 + 6 * 4) * 9);
  Rng rng(15);
  for (int i = 0; i < 50; ++i) {
    const Anchor& a = anchors.anchors[rng.uniform_index(static_cast<std::uint64_t>(anchors.total()))];
    std::array<double, 4> box = {a.cx - rng.uniform(5, 30), a.cy - rng.uniform(5, 30),
                                 a.cx + rng.uniform(5, 30), a.cy + rng.uniform(5, 30)};
    const auto deltas = encode_box(a, box);
    const auto back = decode_box(a, deltas);
    for (int j = 0; j < 4; ++j) CHECK(back[j] == doctest::Approx(box[j]).epsilon(1e-5));
  }
}
