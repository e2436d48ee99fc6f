#include <gtest/gtest.h>

#include <set>

#include "gappy/corpus.hpp"
#include "gappy/errors.hpp"
#include "test_util.hpp"

namespace gappy {
namespace {

using testing::positions_of;
using testing::row;
using testing::span;

std::vector<Tag> tags(const std::string& s) {
  std::vector<Tag> out;
  for (char c : s) out.push_back(tag_from_char(c));
  return out;
}

TEST(ParseCupt, TwoRowSpanWithCategory) {
  const Corpus c = parse_cupt(row(1, "make", 0, "1:LVC.full") + row(2, "decision", 1, "1"));
  ASSERT_EQ(c.sentences.size(), 1u);
  ASSERT_EQ(c.sentences[0].spans.size(), 1u);
  const MweSpan& s = c.sentences[0].spans[0];
  EXPECT_EQ(s.mwe_id, 1);
  EXPECT_EQ(s.category, "LVC.full");
  EXPECT_EQ(s.positions, (std::vector<int>{1, 2}));
  EXPECT_TRUE(c.warnings.empty());
}

TEST(ParseCupt, NoAnnotation) {
  const Corpus c = parse_cupt(row(1, "a", 2) + row(2, "b", 0, "_") + row(3, "c", 2));
  ASSERT_EQ(c.sentences.size(), 1u);
  EXPECT_TRUE(c.sentences[0].spans.empty());
}

TEST(ParseCupt, TokenInTwoSpans) {
  const Corpus c = parse_cupt(row(1, "x", 0, "1:VID;2") + row(2, "y", 1, "1") + row(3, "z", 1, "2"));
  const auto& spans = c.sentences[0].spans;
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[0].positions, (std::vector<int>{1, 2}));
  EXPECT_EQ(spans[1].positions, (std::vector<int>{1, 3}));
  EXPECT_EQ(spans[0].category, "VID");
  EXPECT_FALSE(spans[1].category.has_value());
  // id 2 was never introduced with a category
  EXPECT_EQ(c.warnings.size(), 1u);
}

TEST(ParseCupt, CategoryMayArriveLater) {
  const Corpus c = parse_cupt(row(1, "x", 0, "3") + row(2, "y", 1, "3:IRV"));
  ASSERT_EQ(c.sentences[0].spans.size(), 1u);
  EXPECT_EQ(c.sentences[0].spans[0].category, "IRV");
  EXPECT_EQ(c.warnings.size(), 1u);
}

TEST(ParseCupt, BadColumnCountReportsLine) {
  const std::string text = "# sent_id = a\n" + row(1, "x", 0) + "2\ty\ty\tX\t_\t_\t1\tdep\t_\n";
  try {
    parse_cupt(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ParseCupt, NonIntegerHead) {
  EXPECT_THROW(parse_cupt("1\tx\tx\tX\t_\t_\troot\tdep\t_\t_\t*\n"), ParseError);
  EXPECT_THROW(parse_cupt("1\tx\tx\tX\t_\t_\t1\tdep\t_\t_\t*\n"), ParseError);  // self-headed
  EXPECT_THROW(parse_cupt("1\tx\tx\tX\t_\t_\t-1\tdep\t_\t_\t*\n"), ParseError);
}

TEST(ParseCupt, DropsRangeAndEmptyNodeRows) {
  const std::string text = "1-2\tdu\t_\t_\t_\t_\t_\t_\t_\t_\t*\n" + row(1, "de", 2) + row(2, "le", 0) +
                           "2.1\tx\t_\t_\t_\t_\t_\t_\t_\t_\t*\n" + row(3, "chat", 2, "1:VID");
  const Corpus c = parse_cupt(text);
  ASSERT_EQ(c.sentences.size(), 1u);
  const Sentence& s = c.sentences[0];
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.tokens[2].form, "chat");
  EXPECT_EQ(s.tokens[2].head, 2);
  EXPECT_EQ(s.spans[0].positions, (std::vector<int>{3}));
}

TEST(ParseCupt, SentenceIdsAndSeparation) {
  const std::string text = "# sent_id = first\n" + row(1, "a", 0) + "\n\n# source_sent_id = x y z\n# sent_id = 2\n" +
                           row(1, "b", 0) + "\n" + row(1, "c", 0);
  const Corpus c = parse_cupt(text);
  ASSERT_EQ(c.sentences.size(), 3u);
  EXPECT_EQ(c.sentences[0].source_id, "first");
  EXPECT_EQ(c.sentences[1].source_id, "x y z");
  EXPECT_EQ(c.sentences[2].source_id, "s3");
}

TEST(ParseCupt, PositionStable) {
  // token i carries the i-th word row's columns
  Rng rng(3);
  std::string text;
  std::vector<std::string> forms;
  for (int i = 1; i <= 7; ++i) {
    forms.push_back("f" + std::to_string(rng.below(1000)));
    if (i == 4) text += "4-5\tzz\t_\t_\t_\t_\t_\t_\t_\t_\t*\n";
    text += row(i, forms.back(), i == 1 ? 0 : 1);
  }
  const Sentence s = parse_cupt(text).sentences.at(0);
  for (std::size_t i = 0; i < forms.size(); ++i) {
    EXPECT_EQ(s.tokens[i].id, static_cast<int>(i) + 1);
    EXPECT_EQ(s.tokens[i].form, forms[i]);
  }
}

TEST(WriteCupt, ReproducesInputVerbatim) {
  const std::string text = "# global.columns = ID FORM LEMMA UPOS XPOS FEATS HEAD DEPREL DEPS MISC PARSEME:MWE\n"
                           "# sent_id = a\n" +
                           row(1, "put", 0, "1:VPC.full") + row(2, "it", 1) + row(3, "on", 1, "1") + "\n" +
                           row(1, "x", 0) + "\n";
  EXPECT_EQ(write_cupt(parse_cupt(text).sentences), text);
}

TEST(WriteCupt, ReplacesMweColumn) {
  const Corpus c = parse_cupt(row(1, "put", 0, "1:VPC.full") + row(2, "it", 1) + row(3, "on", 1, "1"));
  const std::vector<std::vector<MweSpan>> pred{{span({2, 3})}};
  EXPECT_EQ(write_cupt(c.sentences, &pred), row(1, "put", 0) + row(2, "it", 1, "1:MWE") + row(3, "on", 1, "1") + "\n");
}

TEST(FormatMweColumn, SharedToken) {
  const auto cols = format_mwe_column(3, {MweSpan{1, "VID", {1, 2}}, MweSpan{2, std::nullopt, {2, 3}}});
  EXPECT_EQ(cols, (std::vector<std::string>{"1:VID", "1;2:MWE", "2"}));
}

TEST(EncodeBigo, PaperExample) {
  // make important decisions
  EXPECT_EQ(tags_to_string(encode_bigo(3, {span({1, 3})})), "BGI");
}

TEST(EncodeBigo, NoSpans) { EXPECT_EQ(tags_to_string(encode_bigo(4, {})), "OOOO"); }

TEST(EncodeBigo, OverlapKeepsEarlierShorter) {
  EXPECT_EQ(tags_to_string(encode_bigo(5, {span({2, 4}, 1), span({2, 3}, 2)})), "OBIOO");
}

TEST(EncodeBigo, OverlapTieFallsToLowerId) {
  const auto kept = resolve_overlaps({span({1, 3}, 4), span({1, 3}, 2)});
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].mwe_id, 2);
}

TEST(EncodeBigo, InterleavedSpanDropped) {
  // [1,3] and [2,4] interleave: the second begins inside the first's extent
  EXPECT_EQ(tags_to_string(encode_bigo(4, {span({1, 3}, 1), span({2, 4}, 2)})), "BGIO");
}

TEST(EncodeBigo, OutOfRangeSpanThrows) { EXPECT_THROW(encode_bigo(2, {span({1, 3})}), DataError); }

TEST(DecodeBigo, Examples) {
  EXPECT_EQ(positions_of(decode_bigo(tags("BGI"))), (std::vector<std::vector<int>>{{1, 3}}));
  EXPECT_TRUE(decode_bigo(tags("OO")).empty());
  EXPECT_EQ(positions_of(decode_bigo(tags("IOBI"))), (std::vector<std::vector<int>>{{1}, {3, 4}}));
}

TEST(DecodeBigo, IllFormedSequences) {
  // G with nothing open is ignored; trailing G leaves the span as it was
  EXPECT_EQ(positions_of(decode_bigo(tags("GBGG"))), (std::vector<std::vector<int>>{{2}}));
  EXPECT_EQ(positions_of(decode_bigo(tags("BIBI"))), (std::vector<std::vector<int>>{{1, 2}, {3, 4}}));
  const auto spans = decode_bigo(tags("BOIB"));
  ASSERT_EQ(spans.size(), 3u);
  EXPECT_EQ(spans[2].mwe_id, 3);
  EXPECT_FALSE(spans[0].category.has_value());
}

TEST(RoundTripSafe, Examples) {
  EXPECT_TRUE(round_trip_safe(4, {span({1, 3})}));
  EXPECT_FALSE(round_trip_safe(4, {span({1, 4}, 1), span({2, 3}, 2)}));
  EXPECT_TRUE(round_trip_safe(5, {span({1, 2}, 1), span({4, 5}, 2)}));
}

TEST(GapSize, Examples) {
  EXPECT_EQ(gap_size(span({4, 6})), 1);
  EXPECT_EQ(gap_size(span({1, 2, 3})), 0);
  EXPECT_EQ(gap_size(span({2, 4, 9})), 5);
}

// Random span sets with disjoint extents, one span per extent.
std::vector<MweSpan> random_flat_spans(std::size_t n, Rng& rng) {
  std::vector<MweSpan> spans;
  int p = 1;
  while (p <= static_cast<int>(n)) {
    if (rng.uniform() < 0.4) {
      const int len = 1 + static_cast<int>(rng.below(std::min<std::uint64_t>(6, n - p + 1)));
      MweSpan s{static_cast<int>(spans.size()) + 1, std::nullopt, {p}};
      for (int q = p + 1; q < p + len - 1; ++q)
        if (rng.uniform() < 0.5) s.positions.push_back(q);
      if (len > 1) s.positions.push_back(p + len - 1);
      spans.push_back(s);
      p += len;
    } else {
      ++p;
    }
  }
  return spans;
}

TEST(CodecProperty, RoundTripOnFlatSpanSets) {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(15);
    const auto spans = random_flat_spans(n, rng);
    const auto t = encode_bigo(n, spans);
    EXPECT_EQ(positions_of(decode_bigo(t)), positions_of(spans)) << tags_to_string(t);
    EXPECT_TRUE(round_trip_safe(n, spans));
    int gaps = 0;
    for (const auto& s : spans) gaps += gap_size(s);
    EXPECT_EQ(std::count(t.begin(), t.end(), Tag::G), gaps);
  }
}

TEST(CodecProperty, ArbitrarySpanSetsResolveToDisjointExtents) {
  Rng rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.below(10);
    std::vector<MweSpan> spans;
    const std::size_t count = rng.below(4);
    for (std::size_t k = 0; k < count; ++k) {
      std::set<int> pos;
      const std::size_t size = 1 + rng.below(std::min<std::size_t>(3, n));
      while (pos.size() < size) pos.insert(1 + static_cast<int>(rng.below(n)));
      spans.push_back(span({pos.begin(), pos.end()}, static_cast<int>(k) + 1));
    }
    const auto kept = resolve_overlaps(spans);
    for (std::size_t a = 0; a + 1 < kept.size(); ++a) EXPECT_LT(kept[a].last(), kept[a + 1].first());
    // decode(encode) equals the resolved set whenever the sentence is round-trip safe
    const auto decoded = positions_of(decode_bigo(encode_bigo(n, spans)));
    EXPECT_EQ(decoded, positions_of(kept));
    EXPECT_EQ(round_trip_safe(n, spans), kept.size() == spans.size());
  }
}

TEST(Adjacency, TwoTokens) {
  Sentence s;
  s.tokens = {Token{1, "a", "a", "X", 0, "root", "*"}, Token{2, "b", "b", "X", 1, "dep", "*"}};
  const AdjacencySet adj = build_adjacency(s);
  EXPECT_EQ(adj.head_to_dep_matrix(), (std::vector<double>{0, 1, 0, 0}));
  EXPECT_EQ(adj.dep_to_head_matrix(), (std::vector<double>{0, 0, 1, 0}));
}

TEST(Adjacency, SingleRoot) {
  Sentence s;
  s.tokens = {Token{1, "a", "a", "X", 0, "root", "*"}};
  const AdjacencySet adj = build_adjacency(s);
  EXPECT_EQ(adj.head_to_dep_matrix(), (std::vector<double>{0}));
  EXPECT_EQ(adj.self_matrix(), (std::vector<double>{1}));
}

TEST(Adjacency, HeadOutOfRangeNamesSentence) {
  Sentence s;
  s.source_id = "doc-7";
  s.tokens = {Token{1, "a", "a", "X", 0, "root", "*"}, Token{2, "b", "b", "X", 9, "dep", "*"}};
  try {
    build_adjacency(s);
    FAIL() << "expected StructureError";
  } catch (const StructureError& e) {
    EXPECT_NE(std::string(e.what()).find("doc-7"), std::string::npos);
  }
}

TEST(Adjacency, TransposeAndSelfOnRandomTrees) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Sentence s = testing::random_tree_sentence(1 + rng.below(12), rng);
    ASSERT_FALSE(check_tree(s).has_value());
    const AdjacencySet adj = build_adjacency(s);
    const std::size_t n = s.size();
    for (std::size_t j = 0; j < n; ++j) {
      int column = 0;
      for (std::size_t i = 0; i < n; ++i) {
        EXPECT_EQ(adj.dep_to_head(i, j), adj.head_to_dep(j, i));
        EXPECT_EQ(adj.self(i, j), i == j ? 1 : 0);
        column += adj.head_to_dep(i, j);
      }
      EXPECT_LE(column, 1);
    }
  }
}

TEST(CheckTree, DetectsCyclesAndRoots) {
  Sentence s;
  s.tokens = {Token{1, "a", "a", "X", 2, "", "*"}, Token{2, "b", "b", "X", 1, "", "*"},
              Token{3, "c", "c", "X", 0, "", "*"}};
  EXPECT_TRUE(check_tree(s).has_value());
  s.tokens[0].head = 3;
  s.tokens[1].head = 3;
  EXPECT_FALSE(check_tree(s).has_value());
  s.tokens[0].head = 0;
  EXPECT_TRUE(check_tree(s).has_value());
}

TEST(Vocab, MinCountFilters) {
  const Corpus c = parse_cupt(row(1, "a", 0) + row(2, "a", 1) + row(3, "b", 1) + row(4, "a", 1));
  const Vocab v = build_vocab(c, 2);
  EXPECT_EQ(v.words(), (std::vector<std::string>{"<pad>", "<unk>", "a"}));
  EXPECT_EQ(v.index("b"), Vocab::kUnk);
}

TEST(Vocab, EmptyCorpus) { EXPECT_EQ(build_vocab(Corpus{}, 1).size(), 2u); }

TEST(Vocab, TiesAreLexicographic) {
  const Vocab v = build_vocab(parse_cupt(row(1, "b", 0) + row(2, "a", 1)), 1);
  EXPECT_EQ(v.index("a"), 2);
  EXPECT_EQ(v.index("b"), 3);
}

}  // namespace
}  // namespace gappy
