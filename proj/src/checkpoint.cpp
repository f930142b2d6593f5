#include "eud/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace eud
{
namespace
{
constexpr std::string_view kMagic = "EUDCKPT\n";

class Writer
{
public:
  void u32(std::uint32_t v)
  {
    for (int i = 0; i < 4; ++i) {
      bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
  }
  void u64(std::uint64_t v)
  {
    for (int i = 0; i < 8; ++i) {
      bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s)
  {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.append(s);
  }
  std::string & bytes() { return bytes_; }

private:
  std::string bytes_;
};

class Reader
{
public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32()
  {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  std::uint64_t u64()
  {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str()
  {
    const auto size = u32();
    need(size);
    std::string out(bytes_.substr(pos_, size));
    pos_ += size;
    return out;
  }
  bool done() const { return pos_ == bytes_.size(); }

private:
  void need(std::size_t count) const
  {
    if (bytes_.size() - pos_ < count) {
      throw CheckpointError("checkpoint payload is truncated");
    }
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

void write_vocab(Writer & w, const LabelVocab & vocab)
{
  w.u32(static_cast<std::uint32_t>(vocab.size()));
  for (const auto & label : vocab.labels()) {
    w.str(label);
  }
}

LabelVocab read_vocab(Reader & r)
{
  const auto count = r.u32();
  std::vector<std::string> labels;
  for (std::uint32_t i = 0; i < count; ++i) {
    labels.push_back(r.str());
  }
  return LabelVocab(std::move(labels));
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint & checkpoint)
{
  Writer payload;
  payload.str(format_config(RunConfig{checkpoint.model.hyper, checkpoint.train}));
  payload.u32(static_cast<std::uint32_t>(checkpoint.epoch));
  payload.u32(static_cast<std::uint32_t>(checkpoint.dev_history.size()));
  for (const double v : checkpoint.dev_history) {
    payload.f64(v);
  }
  write_vocab(payload, checkpoint.model.labels);
  write_vocab(payload, checkpoint.model.tree_labels);

  auto params = checkpoint.model.params;  // for_each_tensor needs mutable access
  std::uint32_t count = 0;
  params.for_each_tensor([&](const std::string &, auto &) { ++count; });
  payload.u32(count);
  params.for_each_tensor([&](const std::string & name, auto & tensor) {
    payload.str(name);
    payload.u32(static_cast<std::uint32_t>(tensor.rows()));
    payload.u32(static_cast<std::uint32_t>(tensor.cols()));
    for (Eigen::Index i = 0; i < tensor.size(); ++i) {
      payload.f64(tensor.data()[i]);
    }
  });

  Writer out;
  out.bytes().append(kMagic);
  out.u32(kCheckpointFormatVersion);
  out.u64(payload.bytes().size());
  out.bytes().append(payload.bytes());
  out.u64(fnv1a(payload.bytes()));
  return std::move(out.bytes());
}

Checkpoint deserialize_checkpoint(std::string_view bytes)
{
  if (bytes.size() < kMagic.size() + 12 || bytes.substr(0, kMagic.size()) != kMagic) {
    throw CheckpointError("not a checkpoint file");
  }
  Reader header(bytes.substr(kMagic.size(), 12));
  const auto version = header.u32();
  if (version != kCheckpointFormatVersion) {
    throw CheckpointError("checkpoint format version " + std::to_string(version) +
                          " is not supported (expected " + std::to_string(kCheckpointFormatVersion) + ")");
  }
  const auto length = header.u64();
  const auto body = bytes.substr(kMagic.size() + 12);
  if (body.size() != length + 8) {
    throw CheckpointError("checkpoint is truncated or has trailing data");
  }
  const auto payload = body.substr(0, length);
  if (Reader(body.substr(length)).u64() != fnv1a(payload)) {
    throw CheckpointError("checkpoint checksum mismatch");
  }

  Reader r(payload);
  Checkpoint checkpoint;
  RunConfig config;
  try {
    config = parse_config(r.str());
  } catch (const ConfigError & e) {
    throw CheckpointError(std::string("checkpoint configuration is invalid: ") + e.what());
  }
  checkpoint.train = config.train;
  checkpoint.epoch = static_cast<int>(r.u32());
  const auto history = r.u32();
  for (std::uint32_t i = 0; i < history; ++i) {
    checkpoint.dev_history.push_back(r.f64());
  }
  auto labels = read_vocab(r);
  auto tree_labels = read_vocab(r);

  auto & model = checkpoint.model;
  model.hyper = config.hyper;
  model.labels = std::move(labels);
  model.tree_labels = std::move(tree_labels);
  const int dim = config.hyper.encoder.dim;
  model.params.encoder.config = config.hyper.encoder;
  model.params.encoder.layers.resize(static_cast<std::size_t>(config.hyper.encoder.layers));
  if (config.hyper.mtl_enabled) {
    model.params.tree.emplace();
    model.params.tree->label_bilinear.resize(static_cast<std::size_t>(model.tree_labels.size()));
  }

  const auto count = r.u32();
  std::uint32_t seen = 0;
  model.params.for_each_tensor([&](const std::string & name, auto & tensor) {
    if (seen++ >= count) {
      throw CheckpointError("checkpoint is missing tensor " + name);
    }
    const auto stored = r.str();
    if (stored != name) {
      throw CheckpointError("expected tensor " + name + ", found " + stored);
    }
    const auto rows = r.u32();
    const auto cols = r.u32();
    if constexpr (std::remove_reference_t<decltype(tensor)>::ColsAtCompileTime == 1) {
      if (cols != 1) {
        throw CheckpointError("tensor " + name + " should be a vector");
      }
      tensor.resize(rows);
    } else {
      tensor.resize(rows, cols);
    }
    for (Eigen::Index i = 0; i < tensor.size(); ++i) {
      tensor.data()[i] = r.f64();
    }
  });
  if (seen != count || !r.done()) {
    throw CheckpointError("checkpoint tensor list does not match its configuration");
  }
  const auto & enc = model.params.encoder;
  if (enc.embedding.rows() != config.hyper.encoder.vocab_size || enc.embedding.cols() != dim ||
      model.params.label.output_weight.rows() != model.labels.size()) {
    throw CheckpointError("checkpoint tensor shapes do not match its configuration");
  }
  return checkpoint;
}

void save_checkpoint(const Checkpoint & checkpoint, const std::string & path)
{
  const auto bytes = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw CheckpointError("cannot open '" + path + "' for writing");
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw CheckpointError("failed writing '" + path + "'");
  }
}

Checkpoint load_checkpoint(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CheckpointError("cannot open '" + path + "' for reading");
  }
  std::ostringstream bytes;
  bytes << in.rdbuf();
  return deserialize_checkpoint(bytes.str());
}

}  // namespace eud
