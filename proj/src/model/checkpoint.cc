// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "model/checkpoint.h"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "common/config_text.h"
#include "common/errors.h"

namespace mute {

namespace {

constexpr char kMagic[8] = {'M', 'U', 'T', 'E', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

void put_str(std::string& out, const std::string& s) {
  put_u64(out, s.size());
  out += s;
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(
               static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void raw(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) throw ParseError("checkpoint truncated");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void Archive::add(const std::string& name, const ad::Tensor& t) {
  tensors.emplace_back(name, ad::Tensor(t.shape(), std::vector<double>(
                                                       t.data().begin(),
                                                       t.data().end())));
}

const ad::Tensor* Archive::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

const ad::Tensor& Archive::get(const std::string& name) const {
  const ad::Tensor* t = find(name);
  if (!t) throw ParseError("checkpoint has no tensor '" + name + "'");
  return *t;
}

std::string Archive::serialize() const {
  static_assert(sizeof(double) == 8);
  std::string out(kMagic, sizeof(kMagic));
  put_u64(out, kVersion);
  put_str(out, kind);
  put_str(out, config);
  put_u64(out, tensors.size());
  for (const auto& [name, t] : tensors) {
    put_str(out, name);
    put_u64(out, t.rank());
    for (std::size_t d : t.shape()) put_u64(out, d);
    for (double v : t.data()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      put_u64(out, bits);
    }
  }
  return out;
}

Archive Archive::deserialize(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("not a checkpoint file (bad magic)");
  }
  Reader r(bytes);
  char magic[8];
  r.raw(magic, 8);
  const std::uint64_t version = r.u64();
  if (version != kVersion) {
    throw ParseError("unsupported checkpoint version " +
                     std::to_string(version));
  }
  Archive a;
  a.kind = r.str();
  a.config = r.str();
  const std::uint64_t count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const std::uint64_t rank = r.u64();
    if (rank > 8) throw ParseError("checkpoint tensor '" + name + "' rank");
    ad::Shape shape;
    std::uint64_t total = 1;
    for (std::uint64_t d = 0; d < rank; ++d) {
      shape.push_back(r.u64());
      total *= shape.back();
    }
    if (total > bytes.size() / 8) {
      throw ParseError("checkpoint tensor '" + name + "' too large");
    }
    std::vector<double> data(total);
    for (auto& v : data) {
      const std::uint64_t bits = r.u64();
      std::memcpy(&v, &bits, 8);
    }
    a.tensors.emplace_back(std::move(name),
                           ad::Tensor(std::move(shape), std::move(data)));
  }
  if (!r.done()) throw ParseError("trailing bytes after checkpoint");
  return a;
}

void Archive::save(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    const std::string bytes = serialize();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw IoError("cannot move checkpoint into place at " + path);
  }
}

Archive Archive::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path);
  std::ostringstream bytes;
  bytes << in.rdbuf();
  try {
    return deserialize(bytes.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

namespace {

void restore(const Archive& a, const std::string& path, ad::Tensor& dst) {
  const ad::Tensor& src = a.get(path);
  if (src.shape() != dst.shape()) {
    throw ParseError("checkpoint tensor '" + path + "' has shape " +
                     ad::shape_str(src.shape()) + ", model expects " +
                     ad::shape_str(dst.shape()));
  }
  std::copy(src.data().begin(), src.data().end(), dst.data().begin());
}

}  // namespace

Archive model_to_archive(LasModel& model) {
  Archive a;
  a.kind = kModelKind;
  ConfigFile cfg;
  model.config.write(cfg.section("model"));
  cfg.section("state").set("bn_mode", std::string(nn::bn_mode_name(model.bn_mode())));
  a.config = cfg.render();
  for (const auto& e : model.parameters()) a.add(e.path, *e.tensor);
  for (const auto& e : model.buffers()) a.add(e.path, *e.tensor);
  return a;
}

LasModel model_from_archive(const Archive& a) {
  if (a.kind != kModelKind) {
    throw ParseError("checkpoint holds a '" + a.kind + "', not a model");
  }
  ConfigFile cfg = ConfigFile::parse(a.config);
  LasModel m = LasModel::create(ModelConfig::read(cfg.find("model")), 0);
  SectionReader state(cfg.find("state"), "state");
  m.set_bn_mode(nn::parse_bn_mode(state.str("bn_mode", "train")));
  state.finish();
  for (const auto& e : m.parameters()) restore(a, e.path, *e.tensor);
  for (const auto& e : m.buffers()) restore(a, e.path, *e.tensor);
  return m;
}

void save_model(LasModel& model, const std::string& path) {
  model_to_archive(model).save(path);
}

LasModel load_model(const std::string& path) {
  return model_from_archive(Archive::load(path));
}

Archive lm_to_archive(FusionLm& lm) {
  Archive a;
  a.kind = kLmKind;
  ConfigFile cfg;
  lm.config.write(cfg.section("lm"));
  a.config = cfg.render();
  for (const auto& e : lm.parameters()) a.add(e.path, *e.tensor);
  return a;
}

FusionLm lm_from_archive(const Archive& a) {
  if (a.kind != kLmKind) {
    throw ParseError("checkpoint holds a '" + a.kind + "', not a language model");
  }
  ConfigFile cfg = ConfigFile::parse(a.config);
  FusionLm lm = FusionLm::create(LmConfig::read(cfg.find("lm")), 0);
  for (const auto& e : lm.parameters()) restore(a, e.path, *e.tensor);
  return lm;
}

void save_lm(FusionLm& lm, const std::string& path) {
  lm_to_archive(lm).save(path);
}

FusionLm load_lm(const std::string& path) {
  return lm_from_archive(Archive::load(path));
}

void copy_model_values(LasModel& dst, LasModel& src) {
  auto dp = dst.parameters();
  auto sp = src.parameters();
  if (dp.size() != sp.size()) throw ContractError("copy_model_values: registry mismatch");
  for (std::size_t i = 0; i < dp.size(); ++i) {
    if (dp[i].tensor->shape() != sp[i].tensor->shape()) {
      throw ContractError("copy_model_values: shape mismatch at " + dp[i].path);
    }
    std::copy(sp[i].tensor->data().begin(), sp[i].tensor->data().end(),
              dp[i].tensor->data().begin());
  }
  auto db = dst.buffers();
  auto sb = src.buffers();
  for (std::size_t i = 0; i < db.size(); ++i) {
    std::copy(sb[i].tensor->data().begin(), sb[i].tensor->data().end(),
              db[i].tensor->data().begin());
  }
}

}  // namespace mute
