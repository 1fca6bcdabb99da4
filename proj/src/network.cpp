#include "tsr/network.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "tsr/conv_ops.hpp"
#include "tsr/error.hpp"

namespace tsr {

namespace {

constexpr char kMagic[8] = {'T', 'S', 'R', 'C', 'K', 'P', 'T', '\0'};
constexpr uint32_t kVersion = 1;

void out_dims(const Step& s, int h, int w, int& oh, int& ow) {
  switch (s.kind) {
    case StepKind::Conv:
      oh = (h - 1) / s.stride + 1;
      ow = (w - 1) / s.stride + 1;
      break;
    case StepKind::MaxPool:
      oh = h / 2;
      ow = w / 2;
      break;
    case StepKind::Upsample:
    case StepKind::ConvTranspose:
      oh = 2 * h;
      ow = 2 * w;
      break;
    default:
      oh = h;
      ow = w;
      break;
  }
}

std::vector<double> chw_from(const ImageTensor& x) {
  std::vector<double> out(x.data.size());
  const int h = x.height, w = x.width, c = x.channels;
  for (int k = 0; k < c; ++k) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        out[(static_cast<size_t>(k) * h + i) * w + j] = x.at(i, j, k);
      }
    }
  }
  return out;
}

ImageTensor hwc_from(const std::vector<double>& buf, int c, int h, int w) {
  ImageTensor out(h, w, c);
  for (int k = 0; k < c; ++k) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        out.at(i, j, k) = buf[(static_cast<size_t>(k) * h + i) * w + j];
      }
    }
  }
  return out;
}

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& b, uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

class ByteReader {
public:
  ByteReader(const uint8_t* p, size_t n) : p_(p), n_(n) {}
  void bytes(void* dst, size_t k) {
    if (pos_ + k > n_) throw IoError("checkpoint: truncated file");
    std::memcpy(dst, p_ + pos_, k);
    pos_ += k;
  }
  uint32_t u32() {
    uint8_t b[4];
    bytes(b, 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) |
           (static_cast<uint32_t>(b[3]) << 24);
  }
  uint64_t u64() {
    uint32_t lo = u32();
    uint32_t hi = u32();
    return static_cast<uint64_t>(lo) | (static_cast<uint64_t>(hi) << 32);
  }
  uint8_t u8() {
    uint8_t v;
    bytes(&v, 1);
    return v;
  }
  size_t remaining() const { return n_ - pos_; }

private:
  const uint8_t* p_;
  size_t n_;
  size_t pos_ = 0;
};

} // namespace

Network::Network(NetworkConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.in_channels <= 0 || cfg_.out_channels <= 0) {
    throw ConfigError("network: channel counts must be positive");
  }
  if (cfg_.encoder_widths.empty()) {
    throw ConfigError("network: encoder widths must be non-empty");
  }
  for (int wdt : cfg_.encoder_widths) {
    if (wdt <= 0) throw ConfigError("network: encoder widths must be positive");
  }
  if (cfg_.kernel < 1 || cfg_.kernel % 2 == 0) {
    throw ConfigError("network: kernel size must be odd and positive");
  }

  size_t off = 0;
  auto add_conv = [&](int in_c, int out_c, int stride) {
    Step s;
    s.kind = StepKind::Conv;
    s.in_c = in_c;
    s.out_c = out_c;
    s.stride = stride;
    s.kernel = cfg_.kernel;
    s.w_off = off;
    off += static_cast<size_t>(out_c) * in_c * cfg_.kernel * cfg_.kernel;
    s.b_off = off;
    off += static_cast<size_t>(out_c);
    steps_.push_back(s);
  };
  auto add_convt = [&](int in_c, int out_c) {
    Step s;
    s.kind = StepKind::ConvTranspose;
    s.in_c = in_c;
    s.out_c = out_c;
    s.kernel = 4;
    s.w_off = off;
    off += static_cast<size_t>(in_c) * out_c * 16;
    s.b_off = off;
    off += static_cast<size_t>(out_c);
    steps_.push_back(s);
  };
  auto add_plain = [&](StepKind kind, int c, int slot = -1) {
    Step s;
    s.kind = kind;
    s.in_c = c;
    s.out_c = c;
    s.skip_slot = slot;
    steps_.push_back(s);
  };

  const int stages = static_cast<int>(cfg_.encoder_widths.size());
  int c = cfg_.in_channels;
  for (int k = 0; k < stages; ++k) {
    const int wc = cfg_.encoder_widths[k];
    add_conv(c, wc, 1);
    add_plain(StepKind::Relu, wc);
    if (cfg_.skip_connections) add_plain(StepKind::SaveSkip, wc, k);
    if (cfg_.down == DownsampleMode::MaxPool) {
      add_plain(StepKind::MaxPool, wc);
    } else {
      add_conv(wc, wc, 2);
      add_plain(StepKind::Relu, wc);
    }
    c = wc;
  }
  add_conv(c, c, 1);
  add_plain(StepKind::Relu, c);
  for (int k = stages - 1; k >= 0; --k) {
    const int wc = cfg_.encoder_widths[k];
    if (cfg_.up == UpsampleMode::NearestConv) {
      add_plain(StepKind::Upsample, c);
      add_conv(c, wc, 1);
    } else {
      add_convt(c, wc);
    }
    if (cfg_.skip_connections) add_plain(StepKind::AddSkip, wc, k);
    add_plain(StepKind::Relu, wc);
    add_conv(wc, wc, 1);
    add_plain(StepKind::Relu, wc);
    c = wc;
  }
  add_conv(c, cfg_.out_channels, 1);

  skip_slots_ = cfg_.skip_connections ? stages : 0;
  params_.assign(off, 0.0);
}

void Network::init_params(Rng& rng) {
  for (const Step& s : steps_) {
    if (s.kind != StepKind::Conv && s.kind != StepKind::ConvTranspose) continue;
    const size_t n_w = s.b_off - s.w_off;
    const double fan_in = static_cast<double>(s.in_c) * s.kernel * s.kernel;
    const double limit = std::sqrt(6.0 / fan_in);
    for (size_t i = 0; i < n_w; ++i) {
      params_[s.w_off + i] = rng.uniform(-limit, limit);
    }
    for (int i = 0; i < s.out_c; ++i) params_[s.b_off + i] = 0.0;
  }
}

ImageTensor Network::forward(const ImageTensor& x, GradientTape* tape) const {
  validate(x, "network forward");
  if (x.channels != cfg_.in_channels) {
    throw DimensionError("network forward: wrong channel count");
  }
  const int stages = static_cast<int>(cfg_.encoder_widths.size());
  const int div = 1 << stages;
  if (x.height % div != 0 || x.width % div != 0) {
    throw DimensionError(
        "network forward: spatial size must be divisible by 2^stages");
  }

  if (tape) {
    tape->entries.clear();
    tape->entries.resize(steps_.size());
    tape->valid = true;
  }

  std::vector<double> cur = chw_from(x);
  int c = cfg_.in_channels, h = x.height, w = x.width;
  std::vector<std::vector<double>> skips(skip_slots_);

  for (size_t si = 0; si < steps_.size(); ++si) {
    const Step& s = steps_[si];
    int oh = 0, ow = 0;
    out_dims(s, h, w, oh, ow);
    TapeEntry* e = tape ? &tape->entries[si] : nullptr;
    if (e) {
      e->c = c;
      e->h = h;
      e->w = w;
      e->oc = s.out_c;
      e->oh = oh;
      e->ow = ow;
    }
    std::vector<double> next;
    switch (s.kind) {
      case StepKind::Conv:
        next.resize(static_cast<size_t>(s.out_c) * oh * ow);
        conv_forward(cur.data(), c, h, w, params_.data() + s.w_off,
                     params_.data() + s.b_off, s.out_c, s.kernel, s.stride,
                     next.data());
        if (e) e->x = std::move(cur);
        break;
      case StepKind::ConvTranspose:
        next.resize(static_cast<size_t>(s.out_c) * oh * ow);
        convt_forward(cur.data(), c, h, w, params_.data() + s.w_off,
                      params_.data() + s.b_off, s.out_c, next.data());
        if (e) e->x = std::move(cur);
        break;
      case StepKind::MaxPool: {
        next.resize(static_cast<size_t>(c) * oh * ow);
        std::vector<int> argmax(next.size());
        maxpool_forward(cur.data(), c, h, w, next.data(), argmax.data());
        if (e) e->argmax = std::move(argmax);
        break;
      }
      case StepKind::Upsample:
        next.resize(static_cast<size_t>(c) * oh * ow);
        upsample2_forward(cur.data(), c, h, w, next.data());
        break;
      case StepKind::Relu:
        next.resize(cur.size());
        relu_forward(cur.data(), cur.size(), next.data());
        if (e) e->x = std::move(cur);
        break;
      case StepKind::SaveSkip:
        skips[s.skip_slot] = cur;
        next = std::move(cur);
        break;
      case StepKind::AddSkip: {
        const std::vector<double>& sk = skips[s.skip_slot];
        next = std::move(cur);
        for (size_t i = 0; i < next.size(); ++i) next[i] += sk[i];
        break;
      }
    }
    cur = std::move(next);
    c = s.out_c;
    h = oh;
    w = ow;
  }
  return hwc_from(cur, c, h, w);
}

void Network::backward(const GradientTape& tape, const ImageTensor& loss_grad,
                       std::vector<double>& param_grad) const {
  if (!tape.valid || tape.entries.size() != steps_.size()) {
    throw UsageError("network backward: tape does not match this network");
  }
  if (param_grad.size() != params_.size()) {
    throw UsageError("network backward: gradient buffer size mismatch");
  }
  const TapeEntry& last = tape.entries.back();
  if (loss_grad.channels != cfg_.out_channels ||
      loss_grad.height != last.oh || loss_grad.width != last.ow) {
    throw DimensionError("network backward: loss gradient shape mismatch");
  }

  std::vector<double> gcur = chw_from(loss_grad);
  std::vector<std::vector<double>> skip_grads(skip_slots_);

  for (size_t ri = steps_.size(); ri-- > 0;) {
    const Step& s = steps_[ri];
    const TapeEntry& e = tape.entries[ri];
    std::vector<double> gin;
    switch (s.kind) {
      case StepKind::Conv: {
        // The first step needs no input gradient: data is not trainable.
        double* gx = nullptr;
        if (ri > 0) {
          gin.assign(static_cast<size_t>(e.c) * e.h * e.w, 0.0);
          gx = gin.data();
        }
        conv_backward(e.x.data(), e.c, e.h, e.w, params_.data() + s.w_off,
                      s.out_c, s.kernel, s.stride, gcur.data(), gx,
                      param_grad.data() + s.w_off,
                      param_grad.data() + s.b_off);
        break;
      }
      case StepKind::ConvTranspose: {
        double* gx = nullptr;
        if (ri > 0) {
          gin.assign(static_cast<size_t>(e.c) * e.h * e.w, 0.0);
          gx = gin.data();
        }
        convt_backward(e.x.data(), e.c, e.h, e.w, params_.data() + s.w_off,
                       s.out_c, gcur.data(), gx, param_grad.data() + s.w_off,
                       param_grad.data() + s.b_off);
        break;
      }
      case StepKind::MaxPool:
        gin.assign(static_cast<size_t>(e.c) * e.h * e.w, 0.0);
        maxpool_backward(gcur.data(), e.c, e.h, e.w, e.argmax.data(),
                         gin.data());
        break;
      case StepKind::Upsample:
        gin.assign(static_cast<size_t>(e.c) * e.h * e.w, 0.0);
        upsample2_backward(gcur.data(), e.c, e.h, e.w, gin.data());
        break;
      case StepKind::Relu:
        gin.assign(e.x.size(), 0.0);
        relu_backward(e.x.data(), gcur.data(), e.x.size(), gin.data());
        break;
      case StepKind::AddSkip:
        skip_grads[s.skip_slot] = gcur;
        gin = std::move(gcur);
        break;
      case StepKind::SaveSkip: {
        gin = std::move(gcur);
        const std::vector<double>& sg = skip_grads[s.skip_slot];
        if (!sg.empty()) {
          for (size_t i = 0; i < gin.size(); ++i) gin[i] += sg[i];
        }
        break;
      }
    }
    gcur = std::move(gin);
  }
}

void Network::save(const std::string& path) const {
  std::vector<uint8_t> buf;
  buf.reserve(64 + params_.size() * 8);
  buf.insert(buf.end(), kMagic, kMagic + 8);
  put_u32(buf, kVersion);
  put_u32(buf, static_cast<uint32_t>(cfg_.in_channels));
  put_u32(buf, static_cast<uint32_t>(cfg_.out_channels));
  put_u32(buf, static_cast<uint32_t>(cfg_.kernel));
  buf.push_back(cfg_.skip_connections ? 1 : 0);
  buf.push_back(cfg_.down == DownsampleMode::StridedConv ? 1 : 0);
  buf.push_back(cfg_.up == UpsampleMode::TransposedConv ? 1 : 0);
  buf.push_back(0);
  put_u32(buf, static_cast<uint32_t>(cfg_.encoder_widths.size()));
  for (int wdt : cfg_.encoder_widths) {
    put_u32(buf, static_cast<uint32_t>(wdt));
  }
  put_u64(buf, params_.size());
  for (double p : params_) {
    put_u64(buf, std::bit_cast<uint64_t>(p));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("checkpoint: cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (!f) throw IoError("checkpoint: write failed: " + path);
}

Network Network::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("checkpoint: cannot open: " + path);
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
  ByteReader r(buf.data(), buf.size());
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) {
    throw IoError("checkpoint: bad magic: " + path);
  }
  const uint32_t version = r.u32();
  if (version != kVersion) {
    throw IoError("checkpoint: unsupported version");
  }
  NetworkConfig cfg;
  cfg.in_channels = static_cast<int>(r.u32());
  cfg.out_channels = static_cast<int>(r.u32());
  cfg.kernel = static_cast<int>(r.u32());
  cfg.skip_connections = r.u8() != 0;
  cfg.down = r.u8() != 0 ? DownsampleMode::StridedConv : DownsampleMode::MaxPool;
  cfg.up = r.u8() != 0 ? UpsampleMode::TransposedConv : UpsampleMode::NearestConv;
  r.u8();
  const uint32_t stages = r.u32();
  if (stages == 0 || stages > 16) {
    throw IoError("checkpoint: implausible stage count");
  }
  cfg.encoder_widths.resize(stages);
  for (uint32_t i = 0; i < stages; ++i) {
    cfg.encoder_widths[i] = static_cast<int>(r.u32());
  }
  Network net(std::move(cfg));
  const uint64_t n = r.u64();
  if (n != net.param_count()) {
    throw IoError("checkpoint: parameter count does not match config");
  }
  for (uint64_t i = 0; i < n; ++i) {
    net.params_[i] = std::bit_cast<double>(r.u64());
  }
  if (r.remaining() != 0) {
    throw IoError("checkpoint: trailing bytes");
  }
  return net;
}

AdamOptimizer::AdamOptimizer(AdamConfig cfg, size_t n_params)
    : cfg_(cfg), m_(n_params, 0.0), v_(n_params, 0.0) {}

void AdamOptimizer::step(std::vector<double>& params,
                         const std::vector<double>& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw UsageError("optimizer step: size mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    params[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
  }
}

} // namespace tsr
