#include "hlstm/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hlstm/error.h"

namespace hlstm {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void raw(const void* data, std::size_t n) { out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n)); }
  void tag(std::string_view t) { raw(t.data(), t.size()); }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(std::string_view s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void doubles(const std::vector<double>& v) { raw(v.data(), v.size() * sizeof(double)); }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  void raw(void* dst, std::size_t n) {
    if (n > data_.size() - pos_) throw FormatError("truncated checkpoint");
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }
  void expect_tag(std::string_view t) {
    std::string got(t.size(), '\0');
    raw(got.data(), got.size());
    if (got != t) throw FormatError("corrupt checkpoint: expected section " + std::string(t));
  }
  std::uint8_t u8() {
    std::uint8_t v;
    raw(&v, 1);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, sizeof v);
    return v;
  }
  double f64() {
    double v;
    raw(&v, sizeof v);
    return v;
  }
  std::string str() {
    const std::uint64_t n = count(1);
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  // Reads an element count and checks it fits in the remaining bytes.
  std::uint64_t count(std::size_t min_bytes_each) {
    const std::uint64_t n = u64();
    if (min_bytes_each && n > (data_.size() - pos_) / min_bytes_each) {
      throw FormatError("truncated checkpoint");
    }
    return n;
  }
  Matrix matrix(std::uint64_t rows, std::uint64_t cols) {
    if (cols && rows > (data_.size() - pos_) / sizeof(double) / cols) {
      throw FormatError("truncated checkpoint");
    }
    Matrix m(rows, cols);
    raw(m.values().data(), m.size() * sizeof(double));
    return m;
  }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const TrainedModel& trained, const std::filesystem::path& path) {
  std::ostringstream buffer;
  Writer w(buffer);
  w.tag(kCheckpointMagic);

  w.tag("CONF");
  w.str(nlohmann::json(trained.config).dump());

  w.tag("VOCB");
  const auto tokens = trained.vocab.regular_tokens();
  w.u64(tokens.size());
  for (const auto& t : tokens) w.str(t);

  w.tag("IMPT");
  w.u64(trained.importance.size());
  for (const auto& word : trained.importance.words()) {
    w.u64(word.phishing_freq);
    w.u64(word.legit_freq);
    w.u64(word.phishing_rank);
    w.u64(word.legit_rank);
  }
  w.f64(trained.importance.unk_score());

  w.tag("PARM");
  const ParamStore& params = trained.model.params();
  w.u64(params.size());
  for (const auto& [name, p] : params) {
    w.str(name);
    w.u8(p.is_embedding ? 1 : 0);
    w.u64(p.value.rows());
    w.u64(p.value.cols());
    w.doubles(p.value.values());
  }

  w.tag("ADAM");
  const AdamState& adam = trained.adam;
  w.f64(adam.learning_rate);
  w.f64(adam.beta1);
  w.f64(adam.beta2);
  w.f64(adam.epsilon);
  w.u64(adam.step);
  w.u64(adam.moments.size());
  for (const auto& [name, m] : adam.moments) {
    w.str(name);
    w.u64(m.first.rows());
    w.u64(m.first.cols());
    w.doubles(m.first.values());
    w.doubles(m.second.values());
  }
  w.tag("END\n");

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  const std::string bytes = buffer.str();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string data = ss.str();

  constexpr std::string_view kFamily = "HLSTM-CKPT-";
  if (data.rfind(kFamily, 0) != 0) throw FormatError("not a checkpoint: " + path.string());
  if (data.rfind(kCheckpointMagic, 0) != 0) {
    const auto eol = data.find('\n');
    throw FormatError("unsupported checkpoint version '" +
                      data.substr(0, std::min(eol, std::size_t{32})) + "', expected " +
                      std::string(kCheckpointMagic.substr(0, kCheckpointMagic.size() - 1)));
  }

  Reader r(std::move(data));
  r.expect_tag(kCheckpointMagic);

  r.expect_tag("CONF");
  TrainConfig config;
  try {
    config = nlohmann::json::parse(r.str()).get<TrainConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("corrupt checkpoint config: ") + e.what());
  }

  r.expect_tag("VOCB");
  std::vector<std::string> tokens(r.count(8));
  for (auto& t : tokens) t = r.str();
  Vocabulary vocab(tokens);

  r.expect_tag("IMPT");
  std::vector<WordImportance> words(r.count(32));
  if (!words.empty() && words.size() != tokens.size()) {
    throw FormatError("corrupt checkpoint: importance table does not match vocabulary");
  }
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto& w = words[i];
    w.token = tokens[i];
    w.phishing_freq = r.u64();
    w.legit_freq = r.u64();
    w.phishing_rank = r.u64();
    w.legit_rank = r.u64();
    if (w.phishing_rank == 0) throw FormatError("corrupt checkpoint: zero rank");
    w.score = static_cast<double>(w.legit_rank) / static_cast<double>(w.phishing_rank);
  }
  ImportanceTable importance(std::move(words), r.f64());

  r.expect_tag("PARM");
  ParamStore params;
  const std::uint64_t n_params = r.count(25);
  for (std::uint64_t i = 0; i < n_params; ++i) {
    std::string name = r.str();
    const bool embedding = r.u8() != 0;
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    params.add(name, r.matrix(rows, cols), embedding);
  }

  r.expect_tag("ADAM");
  AdamState adam;
  adam.learning_rate = r.f64();
  adam.beta1 = r.f64();
  adam.beta2 = r.f64();
  adam.epsilon = r.f64();
  adam.step = r.u64();
  const std::uint64_t n_moments = r.count(24);
  for (std::uint64_t i = 0; i < n_moments; ++i) {
    std::string name = r.str();
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    AdamMoments m;
    m.first = r.matrix(rows, cols);
    m.second = r.matrix(rows, cols);
    adam.moments.emplace(std::move(name), std::move(m));
  }
  r.expect_tag("END\n");
  if (!r.at_end()) throw FormatError("corrupt checkpoint: trailing bytes");

  HierarchicalModel model(model_config(config, vocab.size()));
  model.set_params(std::move(params));
  return {config, std::move(vocab), std::move(importance), std::move(model), std::move(adam)};
}

}  // namespace hlstm
