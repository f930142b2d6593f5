#include "eud/conllu.hpp"
#include "testkit.hpp"

#include <doctest.h>

#include <algorithm>
#include <sstream>

using namespace eud;

namespace
{
const char * kSample =
  "# sent_id = s1\n"
  "# text = Er gab's ihr\n"
  "1\tEr\ter\tPRON\tPPER\tCase=Nom\t2\tnsubj\t2:nsubj|3.1:nsubj\t_\n"
  "2-3\tgab's\t_\t_\t_\t_\t_\t_\t_\tSpaceAfter=No\n"
  "2\tgab\tgeben\tVERB\tVVFIN\t_\t0\troot\t0:root\t_\n"
  "3\tes\tes\tPRON\tPPER\t_\t2\tobj\t2:obj\t_\n"
  "3.1\tgab\tgeben\tVERB\t_\t_\t_\t_\t2:conj:und\tCopyOf=2\n"
  "4\tihr\tsie\tPRON\tPPER\t_\t2\tiobj\t2:iobj|3.1:obl:zu\t_\n"
  "\n";

bool has_kind(const std::vector<Violation> & vs, ViolationKind kind)
{
  return std::any_of(vs.begin(), vs.end(), [&](const Violation & v) { return v.kind == kind; });
}

Sentence one_token(std::vector<Dep> deps)
{
  Sentence s;
  Token t;
  t.id = NodeId{1, 0};
  t.form = "x";
  t.head = NodeId{0, 0};
  t.deprel = "root";
  t.deps = std::move(deps);
  s.tokens.push_back(t);
  return s;
}

}  // namespace

TEST_CASE("DEPS splits on '|' then on the first ':' only")
{
  const auto deps = parse_deps("4:nsubj|6:nsubj:xsubj");
  REQUIRE(deps.size() == 2);
  CHECK(deps[0].head == NodeId{4, 0});
  CHECK(deps[0].label == "nsubj");
  CHECK(deps[1].head == NodeId{6, 0});
  CHECK(deps[1].label == "nsubj:xsubj");
  CHECK(parse_deps("_").empty());
  const auto empty_head = parse_deps("3.1:obl:in");
  CHECK(empty_head[0].head == NodeId{3, 1});
  CHECK(empty_head[0].label == "obl:in");
  CHECK_THROWS_AS(parse_deps("4"), std::invalid_argument);
  CHECK_THROWS_AS(parse_deps("x:nsubj"), std::invalid_argument);
  CHECK_THROWS_AS(parse_deps("4:"), std::invalid_argument);
}

TEST_CASE("node ids")
{
  CHECK(NodeId::parse("3.1") == NodeId{3, 1});
  CHECK(NodeId::parse("0") == NodeId{0, 0});
  CHECK(NodeId::parse("12") == NodeId{12, 0});
  CHECK_FALSE(NodeId::parse("3.").has_value());
  CHECK_FALSE(NodeId::parse("-1").has_value());
  CHECK_FALSE(NodeId::parse("a").has_value());
  CHECK(NodeId{3, 1}.str() == "3.1");
  CHECK(NodeId{7, 0}.str() == "7");
  CHECK(NodeId{0, 0}.is_root());
  CHECK(NodeId{3, 2}.is_empty_node());
}

TEST_CASE("deps are written sorted by head")
{
  CHECK(format_deps({{NodeId{6, 0}, "obl:in"}, {NodeId{4, 0}, "nsubj"}}) == "4:nsubj|6:obl:in");
  CHECK(format_deps({{NodeId{3, 1}, "b"}, {NodeId{3, 0}, "a"}, {NodeId{0, 0}, "root"}}) == "0:root|3:a|3.1:b");
  CHECK(format_deps({}) == "_");
}

TEST_CASE("sample with multiword token and empty node parses field by field")
{
  const auto sentences = parse_conllu(std::string_view(kSample));
  REQUIRE(sentences.size() == 1);
  const auto & s = sentences[0];
  CHECK(s.comments == std::vector<std::string>{"# sent_id = s1", "# text = Er gab's ihr"});
  REQUIRE(s.tokens.size() == 5);
  CHECK(s.regular_count() == 4);
  REQUIRE(s.multiword_tokens.size() == 1);
  CHECK(s.multiword_tokens[0].first == 2);
  CHECK(s.multiword_tokens[0].last == 3);
  CHECK(s.multiword_tokens[0].form == "gab's");
  CHECK(s.multiword_tokens[0].misc == "SpaceAfter=No");
  const auto & empty = s.tokens[3];
  CHECK(empty.id == NodeId{3, 1});
  CHECK_FALSE(empty.head.has_value());
  CHECK(empty.deprel == "_");
  CHECK(empty.misc == "CopyOf=2");
  REQUIRE(empty.deps.size() == 1);
  CHECK(empty.deps[0].label == "conj:und");
  CHECK(s.tokens[0].feats == "Case=Nom");
  CHECK(s.tokens[4].deps[1].head == NodeId{3, 1});
  CHECK(s.tokens[4].deps[1].label == "obl:zu");
  CHECK(validate_level2(s).empty());
}

TEST_CASE("write then read reproduces the sample byte for byte")
{
  const auto sentences = parse_conllu(std::string_view(kSample));
  CHECK(write_conllu(sentences) == kSample);
}

TEST_CASE("empty input and empty sentence list")
{
  CHECK(parse_conllu(std::string_view("")).empty());
  CHECK(parse_conllu(std::string_view("\n\n")).empty());
  CHECK(write_conllu({}).empty());
}

TEST_CASE("CRLF input and a missing final blank line are tolerated")
{
  const std::string text = "1\ta\ta\tX\t_\t_\t0\troot\t0:root\t_\r\n";
  const auto s = parse_conllu(std::string_view(text));
  REQUIRE(s.size() == 1);
  CHECK(s[0].tokens[0].misc == "_");
}

TEST_CASE("reader errors carry line numbers")
{
  SUBCASE("wrong column count")
  {
    const std::string text = "# c\n1\ta\ta\tX\t_\t_\t0\troot\t0:root\n";
    try {
      parse_conllu(std::string_view(text));
      FAIL("expected an error");
    } catch (const ConlluError & e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("non-monotonic ids")
  {
    const std::string text =
      "1\ta\ta\tX\t_\t_\t0\troot\t0:root\t_\n"
      "3\tb\tb\tX\t_\t_\t1\tdep\t1:dep\t_\n"
      "2\tc\tc\tX\t_\t_\t1\tdep\t1:dep\t_\n";
    try {
      parse_conllu(std::string_view(text));
      FAIL("expected an error");
    } catch (const ConlluError & e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("bad DEPS")
  {
    const std::string text = "1\ta\ta\tX\t_\t_\t0\troot\t0root\t_\n";
    CHECK_THROWS_AS(parse_conllu(std::string_view(text)), ConlluError);
  }
  SUBCASE("empty field")
  {
    const std::string text = "1\ta\t\tX\t_\t_\t0\troot\t0:root\t_\n";
    CHECK_THROWS_AS(parse_conllu(std::string_view(text)), ConlluError);
  }
}

TEST_CASE("level-2 violations")
{
  CHECK(validate_level2(one_token({{NodeId{0, 0}, "root"}})).empty());

  SUBCASE("self loop")
  {
    Sentence s = one_token({{NodeId{0, 0}, "root"}});
    Token t2;
    t2.id = NodeId{2, 0};
    t2.form = "y";
    t2.head = NodeId{1, 0};
    t2.deprel = "conj";
    t2.deps = {{NodeId{2, 0}, "conj"}};
    s.tokens.push_back(t2);
    const auto vs = validate_level2(s);
    REQUIRE(vs.size() == 1);
    CHECK(vs[0].kind == ViolationKind::SelfLoop);
    CHECK(vs[0].node == NodeId{2, 0});
  }
  SUBCASE("dangling head")
  {
    Sentence s;
    for (int i = 1; i <= 5; ++i) {
      Token t;
      t.id = NodeId{i, 0};
      t.form = "w";
      t.deps = {{NodeId{i == 1 ? 0 : 1, 0}, i == 1 ? "root" : "dep"}};
      s.tokens.push_back(t);
    }
    s.tokens[3].deps = {{NodeId{99, 0}, "dep"}};
    const auto vs = validate_level2(s);
    REQUIRE(vs.size() == 1);
    CHECK(vs[0].kind == ViolationKind::DanglingHead);
    CHECK(vs[0].node == NodeId{4, 0});
  }
  SUBCASE("missing root")
  {
    const auto vs = validate_level2(one_token({}));
    CHECK(has_kind(vs, ViolationKind::MissingRoot));
  }
  SUBCASE("duplicate head and label, while same head with another label is fine")
  {
    Sentence s = one_token({{NodeId{0, 0}, "root"}});
    Token t2;
    t2.id = NodeId{2, 0};
    t2.form = "y";
    t2.deps = {{NodeId{1, 0}, "a"}, {NodeId{1, 0}, "b"}};
    s.tokens.push_back(t2);
    CHECK(validate_level2(s).empty());
    s.tokens[1].deps.push_back({NodeId{1, 0}, "a"});
    CHECK(has_kind(validate_level2(s), ViolationKind::DuplicateDep));
  }
  SUBCASE("non-consecutive ids")
  {
    Sentence s = one_token({{NodeId{0, 0}, "root"}});
    Token t;
    t.id = NodeId{3, 0};
    t.form = "z";
    t.deps = {{NodeId{1, 0}, "dep"}};
    s.tokens.push_back(t);
    CHECK(has_kind(validate_level2(s), ViolationKind::NonConsecutiveId));
    CHECK(has_kind(validate_structure(s), ViolationKind::NonConsecutiveId));
  }
  SUBCASE("multiword span of length one")
  {
    Sentence s = one_token({{NodeId{0, 0}, "root"}});
    s.multiword_tokens.push_back(MultiwordToken{1, 1, "x"});
    CHECK(has_kind(validate_level2(s), ViolationKind::BadMultiwordSpan));
  }
}

TEST_CASE("writer refuses invariant violations and names the sentence")
{
  auto ok = one_token({{NodeId{0, 0}, "root"}});
  auto tabbed = ok;
  tabbed.tokens[0].form = "a\tb";
  try {
    write_conllu({ok, tabbed});
    FAIL("expected an error");
  } catch (const SerializeError & e) {
    CHECK(e.sentence_index() == 1);
  }
  auto empty_field = ok;
  empty_field.tokens[0].lemma = "";
  CHECK_THROWS_AS(write_conllu({empty_field}), SerializeError);
  auto bad_span = ok;
  bad_span.multiword_tokens.push_back(MultiwordToken{1, 1, "x"});
  CHECK_THROWS_AS(write_conllu({bad_span}), SerializeError);
}

TEST_CASE("random sentences round trip through write and parse")
{
  const auto bank = testkit::random_treebank(7, 300, testkit::default_shape());
  const auto text = write_conllu(bank);
  const auto back = parse_conllu(std::string_view(text));
  REQUIRE(back.size() == bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) {
    CHECK(back[i] == bank[i]);
    CHECK(validate_level2(back[i]).empty());
  }
  CHECK(write_conllu(back) == text);
}

TEST_CASE("no line is dropped: token and range lines match the input line count")
{
  const auto bank = testkit::random_treebank(11, 100, testkit::default_shape());
  const auto text = write_conllu(bank);
  std::istringstream in(text);
  std::string line;
  std::size_t content = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') {
      ++content;
    }
  }
  std::size_t emitted = 0;
  for (const auto & s : parse_conllu(std::string_view(text))) {
    emitted += s.tokens.size() + s.multiword_tokens.size();
  }
  CHECK(emitted == content);
}

TEST_CASE("DEPS label splitting is reversible")
{
  for (const std::string field : {"0:root", "4:nsubj:xsubj", "2:obl:from:gen|3.1:conj", "1:a:b:c"}) {
    CHECK(format_deps(parse_deps(field)) == field);
  }
}
