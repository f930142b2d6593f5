#include "eud/conllu.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <utility>

namespace eud
{
namespace
{
std::optional<int> parse_int(std::string_view text)
{
  if (text.empty() || text.size() > 9) {
    return std::nullopt;
  }
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || value < 0) {
    return std::nullopt;
  }
  return value;
}

std::vector<std::string_view> split(std::string_view line, char sep)
{
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(line.substr(start));
      return parts;
    }
    parts.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

bool has_forbidden_char(std::string_view value)
{
  return value.find_first_of("\t\n\r") != std::string_view::npos;
}

class Reader
{
public:
  std::vector<Sentence> run(std::istream & input)
  {
    std::string line;
    while (std::getline(input, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') {
        line.pop_back();
      }
      if (line.empty()) {
        flush();
        continue;
      }
      open_ = true;
      if (line.front() == '#') {
        current_.comments.push_back(line);
        continue;
      }
      parse_line(line);
    }
    flush();
    return std::move(sentences_);
  }

private:
  void flush()
  {
    if (open_) {
      sentences_.push_back(std::move(current_));
    }
    current_ = Sentence{};
    open_ = false;
    last_node_ = NodeId{};
    last_range_end_ = 0;
  }

  [[noreturn]] void fail(const std::string & message) const { throw ConlluError(message, line_no_); }

  void parse_line(std::string_view line)
  {
    const auto fields = split(line, '\t');
    if (fields.size() != 10) {
      fail("expected 10 tab-separated fields, found " + std::to_string(fields.size()));
    }
    for (const auto field : fields) {
      if (field.empty()) {
        fail("empty field");
      }
    }
    const auto dash = fields[0].find('-');
    if (dash != std::string_view::npos) {
      parse_range(fields, dash);
    } else {
      parse_token(fields);
    }
  }

  void parse_range(const std::vector<std::string_view> & fields, std::size_t dash)
  {
    const auto first = parse_int(fields[0].substr(0, dash));
    const auto last = parse_int(fields[0].substr(dash + 1));
    if (!first || !last) {
      fail("malformed multiword range '" + std::string(fields[0]) + "'");
    }
    if (*first <= last_node_.major || *first <= last_range_end_) {
      fail("multiword range '" + std::string(fields[0]) + "' is out of order");
    }
    MultiwordToken range;
    range.first = *first;
    range.last = *last;
    range.form = fields[1];
    for (std::size_t i = 0; i < range.middle.size(); ++i) {
      range.middle[i] = fields[2 + i];
    }
    range.misc = fields[9];
    last_range_end_ = std::max(*first, *last);
    current_.multiword_tokens.push_back(std::move(range));
  }

  void parse_token(const std::vector<std::string_view> & fields)
  {
    const auto id = NodeId::parse(fields[0]);
    if (!id || id->is_root()) {
      fail("malformed id '" + std::string(fields[0]) + "'");
    }
    if (*id <= last_node_) {
      fail("id " + id->str() + " does not follow " + last_node_.str());
    }
    if (id->is_empty_node() && id->major != last_node_.major) {
      fail("empty node " + id->str() + " does not follow token " + std::to_string(id->major));
    }
    Token token;
    token.id = *id;
    token.form = fields[1];
    token.lemma = fields[2];
    token.upos = fields[3];
    token.xpos = fields[4];
    token.feats = fields[5];
    if (fields[6] != "_") {
      if (id->is_empty_node()) {
        fail("empty node " + id->str() + " has a basic head");
      }
      const auto head = NodeId::parse(fields[6]);
      if (!head) {
        fail("malformed head '" + std::string(fields[6]) + "'");
      }
      token.head = *head;
    }
    token.deprel = fields[7];
    try {
      token.deps = parse_deps(fields[8]);
    } catch (const std::invalid_argument & e) {
      fail(e.what());
    }
    token.misc = fields[9];
    last_node_ = *id;
    current_.tokens.push_back(std::move(token));
  }

  std::vector<Sentence> sentences_;
  Sentence current_;
  bool open_ = false;
  NodeId last_node_;
  int last_range_end_ = 0;
  std::size_t line_no_ = 0;
};

void check_writable(const Sentence & sentence, std::size_t index)
{
  auto check_field = [&](std::string_view value, std::string_view what) {
    if (value.empty()) {
      throw SerializeError("empty " + std::string(what) + " field", index);
    }
    if (has_forbidden_char(value)) {
      throw SerializeError(std::string(what) + " contains a tab or line break", index);
    }
  };
  for (const auto & comment : sentence.comments) {
    if (comment.empty() || comment.front() != '#' || comment.find('\n') != std::string::npos) {
      throw SerializeError("malformed comment line", index);
    }
  }
  NodeId previous;
  for (const auto & token : sentence.tokens) {
    if (token.id <= previous || token.id.is_root()) {
      throw SerializeError("token ids are not increasing at " + token.id.str(), index);
    }
    if (token.id.is_empty_node() && token.head) {
      throw SerializeError("empty node " + token.id.str() + " has a basic head", index);
    }
    previous = token.id;
    check_field(token.form, "FORM");
    check_field(token.lemma, "LEMMA");
    check_field(token.upos, "UPOS");
    check_field(token.xpos, "XPOS");
    check_field(token.feats, "FEATS");
    check_field(token.deprel, "DEPREL");
    check_field(token.misc, "MISC");
    for (const auto & dep : token.deps) {
      if (dep.label.empty()) {
        throw SerializeError("empty DEPS label on " + token.id.str(), index);
      }
      if (dep.label.find_first_of("|\t\n\r") != std::string::npos) {
        throw SerializeError("DEPS label contains a separator on " + token.id.str(), index);
      }
    }
  }
  for (const auto & range : sentence.multiword_tokens) {
    if (range.last <= range.first) {
      throw SerializeError("multiword span " + std::to_string(range.first) + "-" +
                             std::to_string(range.last) + " is shorter than two",
                           index);
    }
    check_field(range.form, "FORM");
    check_field(range.misc, "MISC");
    for (const auto & value : range.middle) {
      check_field(value, "multiword column");
    }
  }
}

}  // namespace

std::string NodeId::str() const
{
  if (minor == 0) {
    return std::to_string(major);
  }
  return std::to_string(major) + "." + std::to_string(minor);
}

std::optional<NodeId> NodeId::parse(std::string_view text)
{
  const auto dot = text.find('.');
  if (dot == std::string_view::npos) {
    const auto major = parse_int(text);
    if (!major) {
      return std::nullopt;
    }
    return NodeId{*major, 0};
  }
  const auto major = parse_int(text.substr(0, dot));
  const auto minor = parse_int(text.substr(dot + 1));
  if (!major || !minor || *minor == 0) {
    return std::nullopt;
  }
  return NodeId{*major, *minor};
}

std::size_t Sentence::regular_count() const
{
  return static_cast<std::size_t>(std::count_if(
    tokens.begin(), tokens.end(), [](const Token & t) { return !t.id.is_empty_node(); }));
}

std::vector<Dep> parse_deps(std::string_view field)
{
  std::vector<Dep> deps;
  if (field == "_") {
    return deps;
  }
  for (const auto item : split(field, '|')) {
    const auto colon = item.find(':');
    if (colon == std::string_view::npos || colon + 1 == item.size()) {
      throw std::invalid_argument("malformed DEPS entry '" + std::string(item) + "'");
    }
    const auto head = NodeId::parse(item.substr(0, colon));
    if (!head) {
      throw std::invalid_argument("malformed DEPS head '" + std::string(item) + "'");
    }
    deps.push_back({*head, std::string(item.substr(colon + 1))});
  }
  return deps;
}

std::string format_deps(std::vector<Dep> deps)
{
  if (deps.empty()) {
    return "_";
  }
  std::stable_sort(
    deps.begin(), deps.end(), [](const Dep & a, const Dep & b) { return a.head < b.head; });
  std::string out;
  for (const auto & dep : deps) {
    if (!out.empty()) {
      out += '|';
    }
    out += dep.head.str();
    out += ':';
    out += dep.label;
  }
  return out;
}

std::vector<Sentence> parse_conllu(std::istream & input) { return Reader{}.run(input); }

std::vector<Sentence> parse_conllu(std::string_view text)
{
  std::istringstream stream{std::string(text)};
  return parse_conllu(stream);
}

std::vector<Sentence> read_conllu_file(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open '" + path + "' for reading");
  }
  return parse_conllu(in);
}

void write_conllu(std::ostream & output, const std::vector<Sentence> & sentences)
{
  std::string buffer;
  for (std::size_t index = 0; index < sentences.size(); ++index) {
    const auto & sentence = sentences[index];
    check_writable(sentence, index);
    buffer.clear();
    for (const auto & comment : sentence.comments) {
      buffer += comment;
      buffer += '\n';
    }
    auto range = sentence.multiword_tokens.begin();
    auto emit_ranges_before = [&](int major) {
      while (range != sentence.multiword_tokens.end() && range->first <= major) {
        buffer += std::to_string(range->first) + "-" + std::to_string(range->last) + "\t" +
                  range->form;
        for (const auto & value : range->middle) {
          buffer += '\t';
          buffer += value;
        }
        buffer += '\t';
        buffer += range->misc;
        buffer += '\n';
        ++range;
      }
    };
    for (const auto & token : sentence.tokens) {
      if (!token.id.is_empty_node()) {
        emit_ranges_before(token.id.major);
      }
      buffer += token.id.str();
      for (const auto * field : {&token.form, &token.lemma, &token.upos, &token.xpos, &token.feats}) {
        buffer += '\t';
        buffer += *field;
      }
      buffer += '\t';
      buffer += token.head ? token.head->str() : std::string("_");
      buffer += '\t';
      buffer += token.deprel;
      buffer += '\t';
      buffer += format_deps(token.deps);
      buffer += '\t';
      buffer += token.misc;
      buffer += '\n';
    }
    emit_ranges_before(std::numeric_limits<int>::max());
    buffer += '\n';
    output << buffer;
  }
}

std::string write_conllu(const std::vector<Sentence> & sentences)
{
  std::ostringstream out;
  write_conllu(out, sentences);
  return out.str();
}

void write_conllu_file(const std::string & path, const std::vector<Sentence> & sentences)
{
  const auto text = write_conllu(sentences);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  out << text;
  if (!out) {
    throw std::runtime_error("failed writing '" + path + "'");
  }
}

std::string_view to_string(ViolationKind kind)
{
  switch (kind) {
    case ViolationKind::NonConsecutiveId:
      return "non-consecutive-id";
    case ViolationKind::DanglingHead:
      return "dangling-head";
    case ViolationKind::MissingRoot:
      return "missing-root";
    case ViolationKind::SelfLoop:
      return "self-loop";
    case ViolationKind::DuplicateDep:
      return "duplicate-dep";
    case ViolationKind::BadMultiwordSpan:
      return "bad-multiword-span";
  }
  return "unknown";
}

std::vector<Violation> validate_structure(const Sentence & sentence)
{
  std::vector<Violation> violations;
  int expected_major = 1;
  int expected_minor = 1;
  int last_major = 0;
  for (const auto & token : sentence.tokens) {
    const auto id = token.id;
    if (!id.is_empty_node()) {
      if (id.major != expected_major) {
        violations.push_back({ViolationKind::NonConsecutiveId, id,
                              "expected token " + std::to_string(expected_major) + ", found " +
                                id.str()});
      }
      expected_major = id.major + 1;
      expected_minor = 1;
      last_major = id.major;
    } else {
      if (id.major != last_major || id.minor != expected_minor) {
        violations.push_back({ViolationKind::NonConsecutiveId, id,
                              "expected empty node " + std::to_string(last_major) + "." +
                                std::to_string(expected_minor) + ", found " + id.str()});
      }
      expected_minor = id.minor + 1;
    }
  }
  const int word_count = expected_major - 1;
  for (const auto & range : sentence.multiword_tokens) {
    if (range.last <= range.first || range.first < 1 || range.last > word_count) {
      violations.push_back({ViolationKind::BadMultiwordSpan, NodeId{range.first, 0},
                            "multiword span " + std::to_string(range.first) + "-" +
                              std::to_string(range.last) + " is invalid"});
    }
  }
  return violations;
}

std::vector<Violation> validate_level2(const Sentence & sentence)
{
  auto violations = validate_structure(sentence);
  std::set<NodeId> known{NodeId{}};
  for (const auto & token : sentence.tokens) {
    known.insert(token.id);
  }
  bool has_root = false;
  for (const auto & token : sentence.tokens) {
    std::set<std::pair<NodeId, std::string>> seen;
    for (const auto & dep : token.deps) {
      if (dep.head.is_root()) {
        has_root = true;
      }
      if (dep.head == token.id) {
        violations.push_back({ViolationKind::SelfLoop, token.id,
                              "node " + token.id.str() + " is its own enhanced head"});
      } else if (!known.contains(dep.head)) {
        violations.push_back({ViolationKind::DanglingHead, token.id,
                              "head " + dep.head.str() + " of node " + token.id.str() +
                                " does not exist"});
      }
      if (!seen.insert({dep.head, dep.label}).second) {
        violations.push_back({ViolationKind::DuplicateDep, token.id,
                              "duplicate enhanced dependency " + dep.head.str() + ":" + dep.label +
                                " on node " + token.id.str()});
      }
    }
  }
  if (!sentence.tokens.empty() && !has_root) {
    violations.push_back({ViolationKind::MissingRoot, NodeId{}, "no node attaches to ROOT"});
  }
  return violations;
}

}  // namespace eud
