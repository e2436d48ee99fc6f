#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gappy {

struct Token {
  int id = 0;  // 1-based position in the sentence
  std::string form;
  std::string lemma;
  std::string upos;
  int head = 0;  // 0 = root, otherwise the id of the governing token
  std::string deprel;
  std::string mwe_col = "*";
};

struct MweSpan {
  int mwe_id = 0;
  std::optional<std::string> category;
  std::vector<int> positions;  // strictly increasing, 1-based

  int first() const { return positions.front(); }
  int last() const { return positions.back(); }
  int extent() const { return last() - first() + 1; }

  friend bool operator==(const MweSpan&, const MweSpan&) = default;
};

// Tokens inside a span's surface extent that do not belong to it.
int gap_size(const MweSpan& span);

struct Sentence {
  std::string source_id;
  std::vector<Token> tokens;
  std::vector<MweSpan> spans;

  // Original file lines (comments, range rows, word rows) and, per token, the
  // index of its line. Empty for sentences built in memory.
  std::vector<std::string> lines;
  std::vector<std::size_t> token_lines;

  std::size_t size() const { return tokens.size(); }
};

struct Corpus {
  std::vector<Sentence> sentences;
  std::vector<std::string> warnings;
};

// Class indices follow the enumeration order: B=0, I=1, G=2, O=3.
enum class Tag : std::uint8_t { B = 0, I = 1, G = 2, O = 3 };
inline constexpr std::size_t kNumTags = 4;

char tag_char(Tag tag);
Tag tag_from_char(char c);
std::string tags_to_string(const std::vector<Tag>& tags);

// Parses .cupt text: 11 tab-separated columns, '#' comments, blank-line
// separated sentences. Multiword-range rows and empty nodes are dropped.
// Throws ParseError with the offending line number.
Corpus parse_cupt(std::string_view text);
Corpus read_cupt_file(const std::string& path);

// MWE column values for each token of a sentence carrying `spans`:
// "*" for none, "<id>:<category>" on a span's first token ("MWE" when the
// category is unknown), bare "<id>" on continuations.
std::vector<std::string> format_mwe_column(std::size_t num_tokens, const std::vector<MweSpan>& spans);

// Serializes sentences back to .cupt. When `replacement` is given it supplies
// the spans written into the MWE column of sentence i; otherwise the
// sentence's own spans are written. Original lines are preserved verbatim
// apart from the MWE column.
std::string write_cupt(const std::vector<Sentence>& sentences,
                       const std::vector<std::vector<MweSpan>>* replacement = nullptr);

// Spans kept for single-layer tagging, ordered by first position. Greedy by
// (earlier start, shorter extent, lower mwe_id); a span is dropped if any
// token of its extent is already claimed by a kept span.
std::vector<MweSpan> resolve_overlaps(const std::vector<MweSpan>& spans);

std::vector<Tag> encode_bigo(const Sentence& sentence);
std::vector<Tag> encode_bigo(std::size_t num_tokens, const std::vector<MweSpan>& spans);

// Robust decode of any tag sequence. Decoded spans are numbered 1.. in order
// of their first token and carry no category.
std::vector<MweSpan> decode_bigo(const std::vector<Tag>& tags);

// True iff no span is dropped by overlap resolution and decoding the encoded
// tags reproduces every span's positions.
bool round_trip_safe(const Sentence& sentence);
bool round_trip_safe(std::size_t num_tokens, const std::vector<MweSpan>& spans);

// Three s x s 0/1 relation matrices, row-major.
class AdjacencySet {
 public:
  AdjacencySet() = default;
  explicit AdjacencySet(std::size_t size);

  std::size_t size() const { return size_; }

  // [i][j] = 1 iff token i+1 is the head of token j+1.
  std::uint8_t head_to_dep(std::size_t i, std::size_t j) const { return head_to_dep_[i * size_ + j]; }
  std::uint8_t dep_to_head(std::size_t i, std::size_t j) const { return head_to_dep_[j * size_ + i]; }
  std::uint8_t self(std::size_t i, std::size_t j) const { return i == j ? 1 : 0; }

  void add_edge(std::size_t head, std::size_t dependent) { head_to_dep_[head * size_ + dependent] = 1; }

  // Dense copies, useful when handing the matrices to numeric code.
  std::vector<double> head_to_dep_matrix() const;
  std::vector<double> dep_to_head_matrix() const;
  std::vector<double> self_matrix() const;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint8_t> head_to_dep_;
};

// Root attachments (head = 0) produce no edge. Throws StructureError when a
// head points outside the sentence.
AdjacencySet build_adjacency(const Sentence& sentence);

// Empty optional when heads form one tree rooted at 0; otherwise a message.
std::optional<std::string> check_tree(const Sentence& sentence);

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocab();
  explicit Vocab(std::vector<std::string> words);  // words[0..1] are the reserved entries

  int index(const std::string& form) const;
  const std::vector<std::string>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }

 private:
  std::vector<std::string> words_;
  std::map<std::string, int, std::less<>> index_;
};

// Forms with frequency >= min_count, ordered by frequency desc then lexicographically.
Vocab build_vocab(const Corpus& corpus, int min_count);

}  // namespace gappy
