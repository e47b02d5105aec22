// Versioned binary model container; layout documented in docs/model-format.md.

#include <cstring>
#include <fstream>
#include <type_traits>

#include "cdtm/errors.hpp"
#include "cdtm/inference.hpp"

namespace cdtm {

namespace {

constexpr char kMagic[8] = {'C', 'D', 'T', 'M', 'M', 'O', 'D', 'L'};
constexpr char kFooter[8] = {'C', 'D', 'T', 'M', 'E', 'N', 'D', '.'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void write_vec(std::ofstream& out, const std::vector<T>& values) {
  static_assert(std::is_trivially_copyable_v<T>);
  write_pod(out, static_cast<std::int64_t>(values.size()));
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(T)));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
  static_assert(std::is_trivially_copyable_v<T>);
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ParseError("truncated or corrupt model file: " + path);
  return value;
}

template <typename T>
std::vector<T> read_vec(std::ifstream& in, const std::string& path,
                        std::int64_t expected_size = -1) {
  const auto size = read_pod<std::int64_t>(in, path);
  if (size < 0 || (expected_size >= 0 && size != expected_size)) {
    throw ParseError("corrupt model file (bad array size): " + path);
  }
  std::vector<T> values(static_cast<std::size_t>(size));
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(T)));
  if (!in) throw ParseError("truncated or corrupt model file: " + path);
  return values;
}

}  // namespace

void save_model(const FittedModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open model file for writing: " + path);

  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);

  const ModelConfig& cfg = model.cfg;
  write_pod(out, static_cast<std::int32_t>(cfg.topics));
  write_pod(out, cfg.v);
  write_pod(out, cfg.v0);
  write_pod(out, cfg.prior_mean);
  write_pod(out, cfg.alpha);
  write_pod(out, cfg.vhat);
  write_pod(out, static_cast<std::uint8_t>(cfg.granularity));
  write_pod(out, cfg.outer_tol);
  write_pod(out, static_cast<std::int32_t>(cfg.max_outer_iterations));
  write_pod(out, cfg.doc_tol);
  write_pod(out, static_cast<std::int32_t>(cfg.max_doc_iterations));
  write_pod(out, static_cast<std::int32_t>(cfg.cg_iterations));
  write_pod(out, cfg.cg_grad_tol);
  write_pod(out, cfg.jitter_std);
  write_pod(out, cfg.variance_floor);
  write_pod(out, cfg.seed);
  write_pod(out, static_cast<std::uint8_t>(cfg.deterministic ? 1 : 0));

  write_pod(out, model.grid.origin);
  write_vec(out, model.grid.stamps);

  const std::int64_t V = model.vocab ? model.vocab->size() : 0;
  write_pod(out, V);
  for (std::int32_t w = 0; w < V; ++w) {
    const std::string& word = model.vocab->word(w);
    write_pod(out, static_cast<std::uint32_t>(word.size()));
    out.write(word.data(), static_cast<std::streamsize>(word.size()));
  }

  write_vec(out, model.pattern.word_offsets);
  write_vec(out, model.pattern.slot_tick);
  write_vec(out, model.pattern.slot_count);
  write_vec(out, model.params);

  out.write(kFooter, sizeof(kFooter));
  if (!out) throw DataError("failed writing model file: " + path);
}

FittedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("not a model file: " + path);
  }
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != kVersion) {
    throw DataError("unsupported model version " + std::to_string(version) + " (reader supports " +
                    std::to_string(kVersion) + "): " + path);
  }

  FittedModel model;
  ModelConfig& cfg = model.cfg;
  cfg.topics = read_pod<std::int32_t>(in, path);
  cfg.v = read_pod<double>(in, path);
  cfg.v0 = read_pod<double>(in, path);
  cfg.prior_mean = read_pod<double>(in, path);
  cfg.alpha = read_pod<double>(in, path);
  cfg.vhat = read_pod<double>(in, path);
  cfg.granularity = static_cast<Granularity>(read_pod<std::uint8_t>(in, path));
  cfg.outer_tol = read_pod<double>(in, path);
  cfg.max_outer_iterations = read_pod<std::int32_t>(in, path);
  cfg.doc_tol = read_pod<double>(in, path);
  cfg.max_doc_iterations = read_pod<std::int32_t>(in, path);
  cfg.cg_iterations = read_pod<std::int32_t>(in, path);
  cfg.cg_grad_tol = read_pod<double>(in, path);
  cfg.jitter_std = read_pod<double>(in, path);
  cfg.variance_floor = read_pod<double>(in, path);
  cfg.seed = read_pod<std::uint64_t>(in, path);
  cfg.deterministic = read_pod<std::uint8_t>(in, path) != 0;

  model.grid.granularity = cfg.granularity;
  model.grid.origin = read_pod<std::int64_t>(in, path);
  model.grid.stamps = read_vec<std::int64_t>(in, path);

  const auto V = read_pod<std::int64_t>(in, path);
  if (V < 0) throw ParseError("corrupt model file (bad vocabulary size): " + path);
  auto vocab = std::make_shared<Vocabulary>();
  for (std::int64_t w = 0; w < V; ++w) {
    const auto len = read_pod<std::uint32_t>(in, path);
    std::string word(len, '\0');
    in.read(word.data(), len);
    if (!in) throw ParseError("truncated or corrupt model file: " + path);
    vocab->add(word);
  }
  if (vocab->size() != V) throw ParseError("corrupt model file (duplicate words): " + path);
  model.vocab = std::move(vocab);

  auto word_offsets = read_vec<std::int64_t>(in, path, V + 1);
  const std::int64_t S = word_offsets.back();
  auto slot_tick = read_vec<std::int32_t>(in, path, S);
  auto slot_count = read_vec<std::int64_t>(in, path, S);
  model.pattern = SparsityPattern::from_parts(static_cast<std::int32_t>(V),
                                              model.grid.ticks(), std::move(word_offsets),
                                              std::move(slot_tick), std::move(slot_count));

  model.params = read_vec<double>(in, path, cfg.topics * S);

  char footer[8];
  in.read(footer, sizeof(footer));
  if (!in || std::memcmp(footer, kFooter, sizeof(kFooter)) != 0) {
    throw ParseError("truncated or corrupt model file (missing footer): " + path);
  }

  // Posteriors are derived state: recompute rather than store.
  BoundEvaluator eval(model.pattern, model.grid, model.cfg);
  model.posteriors.resize(cfg.topics);
  for (int k = 0; k < cfg.topics; ++k) {
    eval.update_posterior(model.topic_params(k), model.posteriors[k]);
  }
  return model;
}

}  // namespace cdtm
