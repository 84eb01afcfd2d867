// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "burstpar/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "burstpar/error.hpp"

namespace burstpar {
namespace {

struct Tensor {
  std::int64_t c = 0, h = 1, w = 1;
  std::int64_t elems() const { return c * h * w; }
};

struct Spec {
  std::string name;
  std::string kind;
  std::int64_t params = 0;
  double flops = 0.0;        // forward, per sample
  std::int64_t act = 0;      // output elements per sample
  std::vector<int> succ;
};

struct Node {
  int id;
  Tensor out;
};

class Net {
 public:
  int add(Spec s, std::initializer_list<int> inputs) {
    int id = static_cast<int>(specs_.size());
    for (int in : inputs) specs_[in].succ.push_back(id);
    specs_.push_back(std::move(s));
    return id;
  }

  Node conv(const std::string& name, const Node& in, std::int64_t cout, int kh,
            int kw, int stride = 1) {
    Tensor o{cout, (in.out.h + stride - 1) / stride, (in.out.w + stride - 1) / stride};
    Spec s;
    s.name = name;
    s.kind = "conv";
    s.params = kh * kw * in.out.c * cout + cout;
    s.flops = 2.0 * kh * kw * in.out.c * cout * o.h * o.w;
    s.act = o.elems();
    return {add(std::move(s), {in.id}), o};
  }

  Node pool(const std::string& name, const Node& in, int stride) {
    Tensor o{in.out.c, (in.out.h + stride - 1) / stride, (in.out.w + stride - 1) / stride};
    Spec s;
    s.name = name;
    s.kind = "pool";
    s.flops = 9.0 * static_cast<double>(o.elems());
    s.act = o.elems();
    return {add(std::move(s), {in.id}), o};
  }

  Node dense(const std::string& name, const Node& in, std::int64_t out) {
    std::int64_t fin = in.out.elems();
    Spec s;
    s.name = name;
    s.kind = "dense";
    s.params = fin * out + out;
    s.flops = 2.0 * static_cast<double>(fin * out);
    s.act = out;
    return {add(std::move(s), {in.id}), Tensor{out, 1, 1}};
  }

  Node concat(const std::string& name, const std::vector<Node>& ins) {
    Tensor o{0, ins.front().out.h, ins.front().out.w};
    for (const Node& n : ins) o.c += n.out.c;
    Spec s;
    s.name = name;
    s.kind = "concat";
    s.flops = static_cast<double>(o.elems());
    s.act = o.elems();
    int id = add(std::move(s), {});
    for (const Node& n : ins) specs_[n.id].succ.push_back(id);
    return {id, o};
  }

  void edge(int from, int to) { specs_[from].succ.push_back(to); }

  std::vector<Spec>& specs() { return specs_; }

 private:
  std::vector<Spec> specs_;
};

// Adjusts the largest layer so the model totals `target` parameters.
void fit_params(Net& net, std::int64_t target) {
  auto& specs = net.specs();
  std::int64_t total = 0;
  for (const Spec& s : specs) total += s.params;
  auto big = std::max_element(specs.begin(), specs.end(),
                              [](const Spec& a, const Spec& b) { return a.params < b.params; });
  big->params += target - total;
}

void build_vgg(Net& net, int depth) {
  static const std::vector<int> kCfg16{64, 64, 0, 128, 128, 0, 256, 256, 256, 0,
                                       512, 512, 512, 0, 512, 512, 512, 0};
  static const std::vector<int> kCfg11{64, 0, 128, 0, 256, 256, 0, 512, 512, 0,
                                       512, 512, 0};
  if (depth != 11 && depth != 16) {
    throw Error(ErrorKind::kUsage, "vgg_like depth must be 11 or 16");
  }
  const auto& cfg = depth == 16 ? kCfg16 : kCfg11;
  Node x{-1, Tensor{3, 224, 224}};
  int conv_i = 0, pool_i = 0;
  for (int c : cfg) {
    if (c == 0) {
      x = net.pool("pool" + std::to_string(++pool_i), x, 2);
    } else if (x.id < 0) {
      Spec s;
      s.name = "conv1";
      s.kind = "conv";
      s.params = 9 * 3 * c + c;
      s.flops = 2.0 * 9 * 3 * c * 224 * 224;
      s.act = static_cast<std::int64_t>(c) * 224 * 224;
      x = {net.add(std::move(s), {}), Tensor{c, 224, 224}};
      ++conv_i;
    } else {
      x = net.conv("conv" + std::to_string(++conv_i), x, c, 3, 3);
    }
  }
  x = net.dense("fc1", x, 4096);
  x = net.dense("fc2", x, 4096);
  net.dense("fc3", x, 1000);
  if (depth == 16) fit_params(net, 132'000'000);
}

Node stem_conv(Net& net, const std::string& name, Tensor in, std::int64_t cout, int k,
               int stride) {
  Tensor o{cout, (in.h + stride - 1) / stride, (in.w + stride - 1) / stride};
  Spec s;
  s.name = name;
  s.kind = "conv";
  s.params = k * k * in.c * cout + cout;
  s.flops = 2.0 * k * k * in.c * cout * o.h * o.w;
  s.act = o.elems();
  return {net.add(std::move(s), {}), o};
}

void build_wideresnet(Net& net) {
  // Pooling is folded into its neighbours; the block's last conv is also the
  // residual add.
  Node x = stem_conv(net, "stem", Tensor{3, 400, 400}, 64, 7, 2);
  x.out.h = x.out.w = 100;
  const int blocks[4] = {3, 4, 23, 3};
  for (int stage = 0; stage < 4; ++stage) {
    std::int64_t inner = 128LL << stage, out = 256LL << stage;
    for (int b = 0; b < blocks[stage]; ++b) {
      int stride = (stage > 0 && b == 0) ? 2 : 1;
      std::string p = "s" + std::to_string(stage + 1) + "b" + std::to_string(b + 1);
      Node c1 = net.conv(p + "_c1", x, inner, 1, 1);
      Node c2 = net.conv(p + "_c2", c1, inner, 3, 3, stride);
      Node c3 = net.conv(p + "_c3", c2, out, 1, 1);
      if (b == 0) {
        Node ds = net.conv(p + "_down", x, out, 1, 1, stride);
        net.edge(ds.id, c3.id);
      } else {
        net.edge(x.id, c3.id);
      }
      x = c3;
    }
  }
  x.out.h = x.out.w = 1;
  net.dense("fc", x, 1000);
  fit_params(net, 127'000'000);
}

Node inception_a(Net& net, const std::string& p, const Node& in, std::int64_t pool_c) {
  Node b1 = net.conv(p + "_1x1", in, 64, 1, 1);
  Node b2 = net.conv(p + "_5x5r", in, 48, 1, 1);
  b2 = net.conv(p + "_5x5", b2, 64, 5, 5);
  Node b3 = net.conv(p + "_3x3r", in, 64, 1, 1);
  b3 = net.conv(p + "_3x3a", b3, 96, 3, 3);
  b3 = net.conv(p + "_3x3b", b3, 96, 3, 3);
  Node b4 = net.pool(p + "_pool", in, 1);
  b4 = net.conv(p + "_proj", b4, pool_c, 1, 1);
  return net.concat(p + "_cat", {b1, b2, b3, b4});
}

Node inception_b(Net& net, const std::string& p, const Node& in) {
  Node b1 = net.conv(p + "_3x3", in, 384, 3, 3, 2);
  Node b2 = net.conv(p + "_dr", in, 64, 1, 1);
  b2 = net.conv(p + "_da", b2, 96, 3, 3);
  b2 = net.conv(p + "_db", b2, 96, 3, 3, 2);
  Node b3 = net.pool(p + "_pool", in, 2);
  return net.concat(p + "_cat", {b1, b2, b3});
}

Node inception_c(Net& net, const std::string& p, const Node& in, std::int64_t c7) {
  Node b1 = net.conv(p + "_1x1", in, 192, 1, 1);
  Node b2 = net.conv(p + "_7r", in, c7, 1, 1);
  b2 = net.conv(p + "_7a", b2, c7, 1, 7);
  b2 = net.conv(p + "_7b", b2, 192, 7, 1);
  Node b3 = net.conv(p + "_dr", in, c7, 1, 1);
  b3 = net.conv(p + "_da", b3, c7, 7, 1);
  b3 = net.conv(p + "_db", b3, c7, 1, 7);
  b3 = net.conv(p + "_dc", b3, c7, 7, 1);
  b3 = net.conv(p + "_dd", b3, 192, 1, 7);
  Node b4 = net.pool(p + "_pool", in, 1);
  b4 = net.conv(p + "_proj", b4, 192, 1, 1);
  return net.concat(p + "_cat", {b1, b2, b3, b4});
}

Node inception_d(Net& net, const std::string& p, const Node& in) {
  Node b1 = net.conv(p + "_3r", in, 192, 1, 1);
  b1 = net.conv(p + "_3x3", b1, 320, 3, 3, 2);
  Node b2 = net.conv(p + "_7r", in, 192, 1, 1);
  b2 = net.conv(p + "_7a", b2, 192, 1, 7);
  b2 = net.conv(p + "_7b", b2, 192, 7, 1);
  b2 = net.conv(p + "_7c", b2, 192, 3, 3, 2);
  Node b3 = net.pool(p + "_pool", in, 2);
  return net.concat(p + "_cat", {b1, b2, b3});
}

Node inception_e(Net& net, const std::string& p, const Node& in) {
  // The split 1x3 / 3x1 pairs feed the module's concat directly.
  Node b1 = net.conv(p + "_1x1", in, 320, 1, 1);
  Node b2 = net.conv(p + "_3r", in, 384, 1, 1);
  Node b2a = net.conv(p + "_3a", b2, 384, 1, 3);
  Node b2b = net.conv(p + "_3b", b2, 384, 3, 1);
  Node b3 = net.conv(p + "_dr", in, 448, 1, 1);
  b3 = net.conv(p + "_d3", b3, 384, 3, 3);
  Node b3a = net.conv(p + "_da", b3, 384, 1, 3);
  Node b3b = net.conv(p + "_db", b3, 384, 3, 1);
  Node b4 = net.pool(p + "_pool", in, 1);
  b4 = net.conv(p + "_proj", b4, 192, 1, 1);
  return net.concat(p + "_cat", {b1, b2a, b2b, b3a, b3b, b4});
}

void build_inception(Net& net) {
  Node x = stem_conv(net, "conv1a", Tensor{3, 299, 299}, 32, 3, 2);
  x = net.conv("conv2a", x, 32, 3, 3);
  x = net.conv("conv2b", x, 64, 3, 3);
  x = net.pool("pool1", x, 2);
  x = net.conv("conv3b", x, 80, 1, 1);
  x = net.conv("conv4a", x, 192, 3, 3, 2);
  x = inception_a(net, "m5b", x, 32);
  x = inception_a(net, "m5c", x, 64);
  x = inception_a(net, "m5d", x, 64);
  x = inception_b(net, "m6a", x);
  x = inception_c(net, "m6b", x, 128);
  x = inception_c(net, "m6c", x, 160);
  x = inception_c(net, "m6d", x, 160);
  x = inception_c(net, "m6e", x, 192);
  x = inception_d(net, "m7a", x);
  x = inception_e(net, "m7b", x);
  x = inception_e(net, "m7c", x);
  x = net.pool("avgpool", x, 8);
  net.dense("fc", x, 1000);
  fit_params(net, 24'000'000);
}

void build_custom(Net& net, int layers, std::mt19937_64& rng) {
  if (layers < 1) throw Error(ErrorKind::kUsage, "custom model needs at least one layer");
  std::uniform_int_distribution<int> ch(4, 64);
  Node x = stem_conv(net, "conv1", Tensor{3, 64, 64}, 8 * ch(rng), 3, 1);
  for (int i = 1; i < layers; ++i) {
    std::string name = "l" + std::to_string(i + 1);
    if (i + 2 >= layers && i >= 2) {
      x = net.dense(name, x, 128 * ch(rng));
    } else if (i % 4 == 3) {
      x = net.pool(name, x, 2);
    } else {
      x = net.conv(name, x, 8 * ch(rng), 3, 3);
    }
  }
}

double fwd_us(const Spec& s, int b, const SynthOptions& o) {
  double bytes = 4.0 * static_cast<double>(s.act) * b;
  if (s.kind == "conv") {
    double eff = b >= o.knee ? b : o.knee * std::pow(static_cast<double>(b) / o.knee, o.alpha);
    return o.floor_us + s.flops * eff / o.flops_per_us;
  }
  if (s.kind == "dense") {
    return o.floor_us + 4.0 * static_cast<double>(s.params) / o.mem_bytes_per_us +
           s.flops * b / o.flops_per_us;
  }
  return o.floor_us + 2.0 * bytes / o.mem_bytes_per_us + s.flops * b / o.flops_per_us;
}

}  // namespace

const std::vector<std::string>& model_families() {
  static const std::vector<std::string> kFamilies{"vgg_like", "wideresnet_like",
                                                  "inception_like", "custom"};
  return kFamilies;
}

CompGraph generate_model(const std::string& family, const SynthOptions& o) {
  if (o.global_batch < 1) throw Error(ErrorKind::kUsage, "global batch must be positive");
  std::mt19937_64 rng(o.seed);
  Net net;
  ModelInfo info;
  info.name = family;
  info.global_batch = o.global_batch;
  if (family == "vgg_like") {
    build_vgg(net, o.depth);
    info.input_shape = {3, 224, 224};
  } else if (family == "wideresnet_like") {
    build_wideresnet(net);
    info.input_shape = {3, 400, 400};
  } else if (family == "inception_like") {
    build_inception(net);
    info.input_shape = {3, 299, 299};
  } else if (family == "custom") {
    build_custom(net, o.layers, rng);
    info.input_shape = {3, 64, 64};
  } else {
    throw Error(ErrorKind::kUsage, "unknown model family: " + family);
  }

  std::vector<int> batches;
  int top = std::max(o.global_batch, o.profile_max_batch);
  for (int b = 1; b <= top; b *= 2) batches.push_back(b);
  if (std::find(batches.begin(), batches.end(), o.global_batch) == batches.end()) {
    batches.push_back(o.global_batch);
    std::sort(batches.begin(), batches.end());
  }

  std::normal_distribution<double> jitter(0.0, o.jitter);
  std::vector<Layer> layers;
  std::vector<LayerProfile> profiles;
  const auto& specs = net.specs();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const Spec& s = specs[i];
    Layer l;
    l.id = static_cast<int>(i);
    l.name = s.name;
    l.kind = s.kind;
    l.params_bytes = 4 * s.params;
    l.activation_bytes_per_sample = 4 * s.act;
    l.successors = s.succ;
    layers.push_back(std::move(l));
    double j = o.jitter > 0.0 ? std::exp(jitter(rng)) : 1.0;
    LayerProfile p;
    p.layer_id = static_cast<int>(i);
    for (int b : batches) {
      double f = fwd_us(s, b, o) * j;
      p.entries.push_back({b, f, 2.0 * f});
    }
    profiles.push_back(std::move(p));
  }
  return CompGraph::build(info, layers, profiles, o.network);
}

std::int64_t param_count(const CompGraph& graph) {
  return graph.total_params_bytes() / 4;
}

}  // namespace burstpar
