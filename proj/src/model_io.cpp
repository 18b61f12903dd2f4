#include "slda/model_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

namespace slda {

namespace {

constexpr char kMagic[] = "SLDAMDL";
constexpr size_t kMagicLen = 7;
constexpr size_t kKindLen = 16;
constexpr uint16_t kVersion = 1;

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u64(out, bits);
}

struct Cursor {
  const std::string& buf;
  size_t pos = 0;

  void need(size_t n, const char* what) const {
    if (pos + n > buf.size()) throw ParseError(std::string("model file truncated at ") + what);
  }
  uint16_t u16(const char* what) {
    need(2, what);
    uint16_t v = static_cast<uint8_t>(buf[pos]) | (static_cast<uint16_t>(static_cast<uint8_t>(buf[pos + 1])) << 8);
    pos += 2;
    return v;
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64(const char* what) {
    need(8, what);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64(const char* what) {
    uint64_t bits = u64(what);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
};

}  // namespace

bool ModelFile::is_point() const { return kind == "ml-fw" || kind == "synthetic-truth"; }

void save_model(const std::string& path, const ModelFile& model) {
  if (model.kind.size() >= kKindLen) throw ConfigError("model kind tag too long");
  if (model.payload.rows != model.K || model.payload.cols != model.V)
    throw ConfigError("model payload dimensions disagree with header");

  std::string buf;
  buf.reserve(64 + model.payload.data.size() * 8);
  buf.append(kMagic, kMagicLen);
  put_u16(buf, kVersion);
  std::string kind = model.kind;
  kind.resize(kKindLen, '\0');
  buf += kind;
  put_u64(buf, static_cast<uint64_t>(model.K));
  put_u64(buf, static_cast<uint64_t>(model.V));
  put_f64(buf, model.alpha);
  put_f64(buf, model.eta);
  put_f64(buf, model.tau);
  put_f64(buf, model.kappa);
  put_u64(buf, model.t);
  put_u64(buf, model.master_seed);

  size_t payload_start = buf.size();
  for (double v : model.payload.data) put_f64(buf, v);
  uint32_t crc = static_cast<uint32_t>(
      crc32(0, reinterpret_cast<const Bytef*>(buf.data() + payload_start),
            static_cast<uInt>(buf.size() - payload_start)));
  put_u32(buf, crc);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw RuntimeFailure("write failed: " + path);
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < kMagicLen || buf.compare(0, kMagicLen, kMagic) != 0)
    throw ParseError(path + ": not a model file (bad magic)");
  Cursor c{buf, kMagicLen};
  uint16_t version = c.u16("version");
  if (version != kVersion)
    throw ParseError(path + ": unsupported model version " + std::to_string(version));

  ModelFile model;
  c.need(kKindLen, "kind");
  model.kind = buf.substr(c.pos, kKindLen);
  model.kind.resize(std::strlen(model.kind.c_str()));
  c.pos += kKindLen;
  model.K = static_cast<int>(c.u64("K"));
  model.V = static_cast<int>(c.u64("V"));
  model.alpha = c.f64("alpha");
  model.eta = c.f64("eta");
  model.tau = c.f64("tau");
  model.kappa = c.f64("kappa");
  model.t = c.u64("t");
  model.master_seed = c.u64("master_seed");

  size_t cells = static_cast<size_t>(model.K) * static_cast<size_t>(model.V);
  c.need(cells * 8 + 4, "payload");
  size_t payload_start = c.pos;
  model.payload = Matrix(model.K, model.V);
  for (size_t i = 0; i < cells; ++i) model.payload.data[i] = c.f64("payload");
  uint32_t expected = static_cast<uint32_t>(
      crc32(0, reinterpret_cast<const Bytef*>(buf.data() + payload_start),
            static_cast<uInt>(cells * 8)));
  uint32_t stored = c.u32("checksum");
  if (stored != expected) throw ParseError(path + ": payload checksum mismatch");
  if (c.pos != buf.size()) throw ParseError(path + ": trailing bytes after checksum");
  return model;
}

ModelFile model_from_state(const LearnerState& state, const LearnerConfig& cfg) {
  ModelFile model;
  model.kind = learner_name(state.kind);
  model.K = state.num_topics();
  model.V = state.vocab_size();
  model.alpha = cfg.hp.alpha;
  model.eta = cfg.hp.eta;
  model.tau = cfg.schedule.tau;
  model.kappa = cfg.schedule.kappa;
  model.t = state.t;
  model.master_seed = cfg.master_seed;
  model.payload = learner_uses_point_model(state.kind) ? state.beta.m : state.lambda.lambda;
  return model;
}

LearnerState state_from_model(const ModelFile& model) {
  LearnerState state;
  state.kind = parse_learner_kind(model.kind);
  state.t = model.t;
  if (learner_uses_point_model(state.kind)) {
    state.beta.m = model.payload;
  } else {
    state.lambda.lambda = model.payload;
    state.lambda.recompute_row_sums();
  }
  return state;
}

EvalModel eval_model_from(const ModelFile& model) {
  if (model.is_point()) {
    TopicMatrix beta;
    beta.m = model.payload;
    return EvalModel::point(std::move(beta));
  }
  VariationalTopics lambda;
  lambda.lambda = model.payload;
  lambda.recompute_row_sums();
  return EvalModel::variational(std::move(lambda));
}

}  // namespace slda
