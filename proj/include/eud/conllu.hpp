#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eud
{
/// Word index plus empty-node suffix: "3" is {3, 0}, "3.1" is {3, 1}, ROOT is {0, 0}.
struct NodeId
{
  int major = 0;
  int minor = 0;

  bool is_root() const { return major == 0 && minor == 0; }
  bool is_empty_node() const { return minor > 0; }
  std::string str() const;
  static std::optional<NodeId> parse(std::string_view text);

  auto operator<=>(const NodeId &) const = default;
};

struct Dep
{
  NodeId head;
  std::string label;

  bool operator==(const Dep &) const = default;
};

struct Token
{
  NodeId id;
  std::string form = "_";
  std::string lemma = "_";
  std::string upos = "_";
  std::string xpos = "_";
  std::string feats = "_";
  std::optional<NodeId> head;
  std::string deprel = "_";
  std::vector<Dep> deps;
  std::string misc = "_";

  bool operator==(const Token &) const = default;
};

/// Multiword-token range line "first-last". Columns other than FORM and MISC are kept verbatim.
struct MultiwordToken
{
  int first = 0;
  int last = 0;
  std::string form = "_";
  std::array<std::string, 7> middle{"_", "_", "_", "_", "_", "_", "_"};
  std::string misc = "_";

  bool operator==(const MultiwordToken &) const = default;
};

struct Sentence
{
  std::vector<std::string> comments;  // full lines including the leading '#'
  std::vector<Token> tokens;          // regular tokens and empty nodes, surface order
  std::vector<MultiwordToken> multiword_tokens;

  std::size_t regular_count() const;
  bool operator==(const Sentence &) const = default;
};

class ConlluError : public std::runtime_error
{
public:
  ConlluError(const std::string & message, std::size_t line)
  : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line)
  {
  }
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

/// Raised by the writer when a sentence breaks a structural invariant.
class SerializeError : public std::runtime_error
{
public:
  SerializeError(const std::string & message, std::size_t sentence_index)
  : std::runtime_error("sentence " + std::to_string(sentence_index) + ": " + message),
    sentence_index_(sentence_index)
  {
  }
  std::size_t sentence_index() const { return sentence_index_; }

private:
  std::size_t sentence_index_;
};

/// Parses a DEPS column; "_" yields an empty list. Throws std::invalid_argument on bad syntax.
std::vector<Dep> parse_deps(std::string_view field);
/// Serialises deps sorted by head; an empty list becomes "_".
std::string format_deps(std::vector<Dep> deps);

std::vector<Sentence> parse_conllu(std::istream & input);
std::vector<Sentence> parse_conllu(std::string_view text);
std::vector<Sentence> read_conllu_file(const std::string & path);

void write_conllu(std::ostream & output, const std::vector<Sentence> & sentences);
std::string write_conllu(const std::vector<Sentence> & sentences);
void write_conllu_file(const std::string & path, const std::vector<Sentence> & sentences);

enum class ViolationKind {
  NonConsecutiveId,
  DanglingHead,
  MissingRoot,
  SelfLoop,
  DuplicateDep,
  BadMultiwordSpan,
};

struct Violation
{
  ViolationKind kind;
  NodeId node;
  std::string message;
};

std::string_view to_string(ViolationKind kind);

/// Structural checks: consecutive ids, DEPS heads exist, some node attaches to ROOT,
/// no DEPS self-loops, no duplicate (head, label) pairs, MWT spans longer than one.
std::vector<Violation> validate_level2(const Sentence & sentence);

/// The subset of validate_level2 that does not look at the DEPS column.
std::vector<Violation> validate_structure(const Sentence & sentence);

}  // namespace eud
