#include "gappy/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "gappy/errors.hpp"

namespace gappy {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::optional<int> to_int(std::string_view s) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::string_view trim_comment_value(std::string_view line, std::string_view key) {
  // "# key = value"
  std::string_view rest = line.substr(1);
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  if (rest.substr(0, key.size()) != key) return {};
  rest.remove_prefix(key.size());
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  if (rest.empty() || rest.front() != '=') return {};
  rest.remove_prefix(1);
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  return rest;
}

class CuptReader {
 public:
  Corpus read(std::string_view text) {
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      std::string_view line = text.substr(start, end - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      ++line_no;
      consume(line, line_no);
      if (end == text.size()) break;
      start = end + 1;
    }
    flush();
    return std::move(corpus_);
  }

 private:
  void consume(std::string_view line, std::size_t line_no) {
    if (line.empty()) {
      flush();
      return;
    }
    current_.lines.emplace_back(line);
    if (line.front() == '#') {
      for (std::string_view key : {"source_sent_id", "sent_id"}) {
        const std::string_view value = trim_comment_value(line, key);
        if (!value.empty() && (current_.source_id.empty() || key == "source_sent_id")) {
          current_.source_id = std::string(value);
        }
      }
      return;
    }
    const auto cols = split(line, '\t');
    if (cols.size() != 11) {
      throw ParseError("expected 11 tab-separated columns, found " + std::to_string(cols.size()), line_no);
    }
    const std::string_view id_col = cols[0];
    if (id_col.find('-') != std::string_view::npos || id_col.find('.') != std::string_view::npos) {
      return;  // multiword range or empty node
    }
    Token tok;
    const auto id = to_int(id_col);
    if (!id) throw ParseError("non-integer token id '" + std::string(id_col) + "'", line_no);
    if (*id != static_cast<int>(current_.tokens.size()) + 1) {
      throw ParseError("token id " + std::to_string(*id) + " out of sequence", line_no);
    }
    tok.id = *id;
    tok.form = std::string(cols[1]);
    tok.lemma = std::string(cols[2]);
    tok.upos = std::string(cols[3]);
    const auto head = to_int(cols[6]);
    if (!head) throw ParseError("non-integer head '" + std::string(cols[6]) + "'", line_no);
    if (*head < 0) throw ParseError("negative head", line_no);
    if (*head == tok.id) throw ParseError("token " + std::to_string(tok.id) + " is its own head", line_no);
    tok.head = *head;
    tok.deprel = std::string(cols[7]);
    tok.mwe_col = std::string(cols[10]);
    read_mwe_column(tok.mwe_col, tok.id, line_no);
    current_.token_lines.push_back(current_.lines.size() - 1);
    current_.tokens.push_back(std::move(tok));
  }

  void read_mwe_column(std::string_view col, int position, std::size_t line_no) {
    if (col == "*" || col == "_") return;
    for (std::string_view item : split(col, ';')) {
      const std::size_t colon = item.find(':');
      const std::string_view num = item.substr(0, colon);
      const auto mwe_id = to_int(num);
      if (!mwe_id || *mwe_id <= 0) {
        throw ParseError("malformed MWE column item '" + std::string(item) + "'", line_no);
      }
      std::optional<std::string> category;
      if (colon != std::string_view::npos) {
        if (colon + 1 == item.size()) {
          throw ParseError("empty MWE category in '" + std::string(item) + "'", line_no);
        }
        category = std::string(item.substr(colon + 1));
      }
      auto it = open_.find(*mwe_id);
      if (it == open_.end()) {
        if (!category) {
          corpus_.warnings.push_back("line " + std::to_string(line_no) + ": MWE id " +
                                     std::to_string(*mwe_id) +
                                     " continues a span that was never introduced");
        }
        current_.spans.push_back(MweSpan{*mwe_id, category, {}});
        it = open_.emplace(*mwe_id, current_.spans.size() - 1).first;
      }
      MweSpan& span = current_.spans[it->second];
      if (!span.category && category) span.category = category;
      if (span.positions.empty() || span.positions.back() != position) {
        span.positions.push_back(position);
      }
    }
  }

  void flush() {
    if (!current_.tokens.empty()) {
      if (current_.source_id.empty()) {
        current_.source_id = "s" + std::to_string(corpus_.sentences.size() + 1);
      }
      corpus_.sentences.push_back(std::move(current_));
    }
    current_ = Sentence{};
    open_.clear();
  }

  Corpus corpus_;
  Sentence current_;
  std::map<int, std::size_t> open_;
};

void replace_last_column(std::string& line, const std::string& value) {
  const std::size_t tab = line.rfind('\t');
  line.replace(tab + 1, std::string::npos, value);
}

}  // namespace

int gap_size(const MweSpan& span) {
  if (span.positions.empty()) return 0;
  return span.extent() - static_cast<int>(span.positions.size());
}

char tag_char(Tag tag) {
  switch (tag) {
    case Tag::B: return 'B';
    case Tag::I: return 'I';
    case Tag::G: return 'G';
    case Tag::O: return 'O';
  }
  return '?';
}

Tag tag_from_char(char c) {
  switch (c) {
    case 'B': return Tag::B;
    case 'I': return Tag::I;
    case 'G': return Tag::G;
    case 'O': return Tag::O;
  }
  throw std::invalid_argument(std::string("unknown tag '") + c + "'");
}

std::string tags_to_string(const std::vector<Tag>& tags) {
  std::string out;
  for (Tag t : tags) out.push_back(tag_char(t));
  return out;
}

Corpus parse_cupt(std::string_view text) { return CuptReader{}.read(text); }

Corpus read_cupt_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_cupt(buf.str());
}

std::vector<std::string> format_mwe_column(std::size_t num_tokens, const std::vector<MweSpan>& spans) {
  std::vector<std::string> cols(num_tokens);
  for (const MweSpan& span : spans) {
    for (std::size_t k = 0; k < span.positions.size(); ++k) {
      const int pos = span.positions[k];
      if (pos < 1 || static_cast<std::size_t>(pos) > num_tokens) {
        throw DataError("span position " + std::to_string(pos) + " outside sentence");
      }
      std::string& col = cols[pos - 1];
      if (!col.empty()) col += ';';
      col += std::to_string(span.mwe_id);
      if (k == 0) col += ":" + span.category.value_or("MWE");
    }
  }
  for (std::string& col : cols)
    if (col.empty()) col = "*";
  return cols;
}

std::string write_cupt(const std::vector<Sentence>& sentences,
                       const std::vector<std::vector<MweSpan>>* replacement) {
  if (replacement && replacement->size() != sentences.size()) {
    throw DataError("replacement span list does not match sentence count");
  }
  std::string out;
  for (std::size_t si = 0; si < sentences.size(); ++si) {
    const Sentence& s = sentences[si];
    const auto& spans = replacement ? (*replacement)[si] : s.spans;
    const auto mwe = format_mwe_column(s.size(), spans);
    if (!s.lines.empty()) {
      std::vector<std::string> lines = s.lines;
      for (std::size_t t = 0; t < s.size(); ++t) replace_last_column(lines[s.token_lines[t]], mwe[t]);
      for (const auto& line : lines) {
        out += line;
        out += '\n';
      }
    } else {
      if (!s.source_id.empty()) out += "# source_sent_id = " + s.source_id + "\n";
      for (std::size_t t = 0; t < s.size(); ++t) {
        const Token& tok = s.tokens[t];
        out += std::to_string(tok.id) + '\t' + tok.form + '\t' + tok.lemma + '\t' + tok.upos + "\t_\t_\t" +
               std::to_string(tok.head) + '\t' + tok.deprel + "\t_\t_\t" + mwe[t] + '\n';
      }
    }
    out += '\n';
  }
  return out;
}

std::vector<MweSpan> resolve_overlaps(const std::vector<MweSpan>& spans) {
  std::vector<const MweSpan*> order;
  int max_pos = 0;
  for (const MweSpan& s : spans) {
    if (s.positions.empty()) continue;
    order.push_back(&s);
    max_pos = std::max(max_pos, s.last());
  }
  std::stable_sort(order.begin(), order.end(), [](const MweSpan* a, const MweSpan* b) {
    if (a->first() != b->first()) return a->first() < b->first();
    if (a->extent() != b->extent()) return a->extent() < b->extent();
    return a->mwe_id < b->mwe_id;
  });
  std::vector<bool> claimed(static_cast<std::size_t>(max_pos) + 1, false);
  std::vector<MweSpan> kept;
  for (const MweSpan* s : order) {
    bool free = true;
    for (int p = s->first(); p <= s->last() && free; ++p) free = !claimed[p];
    if (!free) continue;
    for (int p = s->first(); p <= s->last(); ++p) claimed[p] = true;
    kept.push_back(*s);
  }
  // Kept extents are disjoint, so sorting by start preserves the greedy order.
  return kept;
}

std::vector<Tag> encode_bigo(std::size_t num_tokens, const std::vector<MweSpan>& spans) {
  std::vector<Tag> tags(num_tokens, Tag::O);
  for (const MweSpan& span : resolve_overlaps(spans)) {
    if (span.first() < 1 || static_cast<std::size_t>(span.last()) > num_tokens) {
      throw DataError("span position outside sentence of " + std::to_string(num_tokens) + " tokens");
    }
    for (int p = span.first(); p <= span.last(); ++p) tags[p - 1] = Tag::G;
    for (int p : span.positions) tags[p - 1] = Tag::I;
    tags[span.first() - 1] = Tag::B;
  }
  return tags;
}

std::vector<Tag> encode_bigo(const Sentence& sentence) { return encode_bigo(sentence.size(), sentence.spans); }

std::vector<MweSpan> decode_bigo(const std::vector<Tag>& tags) {
  std::vector<MweSpan> spans;
  bool open = false;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const int pos = static_cast<int>(i) + 1;
    switch (tags[i]) {
      case Tag::B:
        spans.push_back(MweSpan{static_cast<int>(spans.size()) + 1, std::nullopt, {pos}});
        open = true;
        break;
      case Tag::I:
        if (open) {
          spans.back().positions.push_back(pos);
        } else {
          spans.push_back(MweSpan{static_cast<int>(spans.size()) + 1, std::nullopt, {pos}});
          open = true;
        }
        break;
      case Tag::G:
        break;
      case Tag::O:
        open = false;
        break;
    }
  }
  return spans;
}

bool round_trip_safe(std::size_t num_tokens, const std::vector<MweSpan>& spans) {
  const auto resolved = resolve_overlaps(spans);
  if (resolved.size() != spans.size()) return false;
  const auto decoded = decode_bigo(encode_bigo(num_tokens, resolved));
  if (decoded.size() != resolved.size()) return false;
  for (std::size_t i = 0; i < decoded.size(); ++i) {
    if (decoded[i].positions != resolved[i].positions) return false;
  }
  return true;
}

bool round_trip_safe(const Sentence& sentence) { return round_trip_safe(sentence.size(), sentence.spans); }

AdjacencySet::AdjacencySet(std::size_t size) : size_(size), head_to_dep_(size * size, 0) {}

std::vector<double> AdjacencySet::head_to_dep_matrix() const {
  return std::vector<double>(head_to_dep_.begin(), head_to_dep_.end());
}

std::vector<double> AdjacencySet::dep_to_head_matrix() const {
  std::vector<double> m(size_ * size_);
  for (std::size_t i = 0; i < size_; ++i)
    for (std::size_t j = 0; j < size_; ++j) m[i * size_ + j] = dep_to_head(i, j);
  return m;
}

std::vector<double> AdjacencySet::self_matrix() const {
  std::vector<double> m(size_ * size_, 0.0);
  for (std::size_t i = 0; i < size_; ++i) m[i * size_ + i] = 1.0;
  return m;
}

AdjacencySet build_adjacency(const Sentence& sentence) {
  const std::size_t n = sentence.size();
  AdjacencySet adj(n);
  for (std::size_t j = 0; j < n; ++j) {
    const int head = sentence.tokens[j].head;
    if (head == 0) continue;
    if (head < 0 || static_cast<std::size_t>(head) > n) {
      throw StructureError("sentence " + sentence.source_id + ": token " + std::to_string(j + 1) +
                           " has head " + std::to_string(head) + " outside 0.." + std::to_string(n));
    }
    adj.add_edge(static_cast<std::size_t>(head - 1), j);
  }
  return adj;
}

std::optional<std::string> check_tree(const Sentence& sentence) {
  const std::size_t n = sentence.size();
  std::size_t roots = 0;
  for (const Token& t : sentence.tokens) {
    if (t.head < 0 || static_cast<std::size_t>(t.head) > n) {
      return "token " + std::to_string(t.id) + " has out-of-range head " + std::to_string(t.head);
    }
    if (t.head == 0) ++roots;
  }
  if (roots != 1) return "expected exactly one root, found " + std::to_string(roots);
  for (const Token& t : sentence.tokens) {
    int cur = t.id;
    for (std::size_t steps = 0; cur != 0; ++steps) {
      if (steps > n) return "cycle through token " + std::to_string(t.id);
      cur = sentence.tokens[cur - 1].head;
    }
  }
  return std::nullopt;
}

Vocab::Vocab() : Vocab(std::vector<std::string>{"<pad>", "<unk>"}) {}

Vocab::Vocab(std::vector<std::string> words) : words_(std::move(words)) {
  if (words_.size() < 2) throw std::invalid_argument("vocabulary needs the two reserved entries");
  for (std::size_t i = 2; i < words_.size(); ++i) index_.emplace(words_[i], static_cast<int>(i));
}

int Vocab::index(const std::string& form) const {
  const auto it = index_.find(form);
  return it == index_.end() ? kUnk : it->second;
}

Vocab build_vocab(const Corpus& corpus, int min_count) {
  std::map<std::string, int> counts;
  for (const Sentence& s : corpus.sentences)
    for (const Token& t : s.tokens) ++counts[t.form];
  std::vector<std::pair<std::string, int>> kept;
  for (auto& [form, count] : counts)
    if (count >= std::max(min_count, 1)) kept.emplace_back(form, count);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> words{"<pad>", "<unk>"};
  for (auto& [form, count] : kept) words.push_back(form);
  return Vocab(std::move(words));
}

}  // namespace gappy
