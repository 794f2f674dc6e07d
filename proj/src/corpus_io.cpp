#include "nlnde/corpus_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "nlnde/errors.hpp"
#include "nlnde/utf8.hpp"

namespace nlnde {

namespace {

const std::u32string kBasePunct = U".,;:()[]\"'¿?¡!";
// Infix separators: hyphen, the base punctuation, and quotation marks.
const std::u32string kInfixSep =
    U"-.,;:()[]\"'¿?¡!«»“”‘’";

bool in_set(char32_t c, const std::u32string& set) {
  return set.find(c) != std::u32string::npos;
}

Token make_token(const std::u32string& text, std::size_t start, std::size_t end) {
  return Token{utf8::encode(text.substr(start, end - start)), start, end};
}

std::vector<std::string> split_lines(const std::string& content) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) {
      lines.push_back(content.substr(pos));
      break;
    }
    lines.push_back(content.substr(pos, nl - pos));
    pos = nl + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  for (auto& l : lines)
    if (!l.empty() && l.back() == '\r') l.pop_back();
  return lines;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = s.find(sep, pos);
    if (next == std::string::npos) {
      parts.push_back(s.substr(pos));
      return parts;
    }
    parts.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
}

std::size_t parse_offset(const std::string& s, std::size_t line_no) {
  if (s.empty() || !std::all_of(s.begin(), s.end(),
                                [](char c) { return c >= '0' && c <= '9'; }))
    throw ParseError(line_no, "expected a non-negative integer offset, got '" + s + "'");
  return static_cast<std::size_t>(std::stoull(s));
}

}  // namespace

std::vector<Mention> parse_ann(const std::string& content) {
  std::vector<Mention> mentions;
  std::map<std::string, std::size_t> tid_index;  // "T1" -> index in `mentions`
  const auto lines = split_lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    const std::size_t line_no = i + 1;
    if (line.empty()) continue;
    const auto fields = split_on(line, '\t');
    if (line[0] == 'T') {
      if (fields.size() != 3)
        throw ParseError(line_no, "entity line must have 3 tab-separated fields");
      const auto head = split_on(fields[1], ' ');
      if (head.size() != 3)
        throw ParseError(line_no, "entity header must be '<LABEL> <start> <end>'");
      Mention m;
      m.label = head[0];
      m.start = parse_offset(head[1], line_no);
      m.end = parse_offset(head[2], line_no);
      if (m.start >= m.end)
        throw ParseError(line_no, "mention start must be smaller than end");
      m.surface = fields[2];
      if (tid_index.count(fields[0]))
        throw ParseError(line_no, "duplicate entity id " + fields[0]);
      tid_index[fields[0]] = mentions.size();
      mentions.push_back(std::move(m));
    } else if (line[0] == '#') {
      if (fields.size() != 3)
        throw ParseError(line_no, "note line must have 3 tab-separated fields");
      const auto ref = split_on(fields[1], ' ');
      if (ref.size() != 2 || ref[0] != "AnnotatorNotes")
        throw ParseError(line_no, "note header must be 'AnnotatorNotes T<m>'");
      auto it = tid_index.find(ref[1]);
      if (it == tid_index.end())
        throw ParseError(line_no, "note references unknown entity id " + ref[1]);
      mentions[it->second].code = fields[2];
    } else {
      throw ParseError(line_no, "unrecognized line type");
    }
  }
  return mentions;
}

std::string write_ann(const std::vector<Mention>& mentions) {
  std::ostringstream out;
  std::size_t note_id = 0;
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    const Mention& m = mentions[i];
    out << 'T' << (i + 1) << '\t' << m.label << ' ' << m.start << ' ' << m.end
        << '\t' << m.surface << '\n';
    if (!m.code.empty())
      out << '#' << ++note_id << "\tAnnotatorNotes T" << (i + 1) << '\t'
          << m.code << '\n';
  }
  return out.str();
}

std::vector<Token> tokenize(const std::u32string& text) {
  // Base pass: whitespace split, then peel leading/trailing punctuation.
  std::vector<Token> base;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && utf8::is_space(text[i])) ++i;
    if (i >= n) break;
    std::size_t j = i;
    while (j < n && !utf8::is_space(text[j])) ++j;
    std::size_t lo = i, hi = j;
    std::vector<Token> leading, trailing;
    while (hi - lo > 1 && in_set(text[lo], kBasePunct)) {
      leading.push_back(make_token(text, lo, lo + 1));
      ++lo;
    }
    while (hi - lo > 1 && in_set(text[hi - 1], kBasePunct)) {
      trailing.push_back(make_token(text, hi - 1, hi));
      --hi;
    }
    for (auto& t : leading) base.push_back(std::move(t));
    base.push_back(make_token(text, lo, hi));
    for (auto it = trailing.rbegin(); it != trailing.rend(); ++it)
      base.push_back(std::move(*it));
    i = j;
  }

  // Custom rules, applied in order per token.
  std::vector<Token> tokens;
  for (const Token& tok : base) {
    std::size_t lo = tok.start, hi = tok.end;
    std::optional<Token> suffix;
    if (hi - lo > 1 && (text[hi - 1] == U'.' || text[hi - 1] == U'-')) {
      suffix = make_token(text, hi - 1, hi);
      --hi;
    }
    if (hi - lo > 1 && text[lo] == U'-') {
      tokens.push_back(make_token(text, lo, lo + 1));
      ++lo;
    }
    // Infix rule: every separator character becomes its own token.
    std::size_t seg = lo;
    for (std::size_t k = lo; k < hi; ++k) {
      if (hi - lo > 1 && in_set(text[k], kInfixSep)) {
        if (k > seg) tokens.push_back(make_token(text, seg, k));
        tokens.push_back(make_token(text, k, k + 1));
        seg = k + 1;
      }
    }
    if (seg < hi) tokens.push_back(make_token(text, seg, hi));
    if (suffix) tokens.push_back(std::move(*suffix));
  }
  return tokens;
}

std::vector<Token> tokenize(const std::string& text) {
  return tokenize(utf8::decode(text));
}

std::vector<SentenceRange> split_sentences(const std::u32string& text) {
  const std::size_t n = text.size();
  std::vector<std::size_t> cuts;  // sentence starts after each cut point
  for (std::size_t i = 0; i < n; ++i) {
    if (text[i] == U'\n') {
      cuts.push_back(i + 1);
    } else if (text[i] == U'.') {
      std::size_t j = i + 1;
      while (j < n && utf8::is_space(text[j]) && text[j] != U'\n') ++j;
      if (j > i + 1 && j < n && utf8::is_upper(text[j])) cuts.push_back(j);
    }
  }
  cuts.push_back(n);

  std::vector<SentenceRange> ranges;
  std::size_t begin = 0;
  for (std::size_t cut : cuts) {
    std::size_t lo = begin, hi = cut;
    while (lo < hi && utf8::is_space(text[lo])) ++lo;
    while (hi > lo && utf8::is_space(text[hi - 1])) --hi;
    if (lo < hi) ranges.push_back({lo, hi});
    begin = cut;
  }
  return ranges;
}

std::vector<SentenceRange> split_sentences(const std::string& text) {
  return split_sentences(utf8::decode(text));
}

std::vector<std::vector<Token>> sentence_tokens(const std::string& text) {
  const std::u32string chars = utf8::decode(text);
  std::vector<std::vector<Token>> out;
  for (const SentenceRange& range : split_sentences(chars)) {
    std::vector<Token> tokens =
        tokenize(chars.substr(range.start, range.end - range.start));
    if (tokens.empty()) continue;
    for (Token& t : tokens) {
      t.start += range.start;
      t.end += range.start;
    }
    out.push_back(std::move(tokens));
  }
  return out;
}

TaggedSentence to_bio(const std::vector<Token>& tokens,
                      const std::vector<Mention>& mentions) {
  // Resolve overlaps: longest first, ties to the smaller start.
  std::vector<Mention> order(mentions);
  std::stable_sort(order.begin(), order.end(),
                   [](const Mention& a, const Mention& b) {
                     const auto la = a.end - a.start, lb = b.end - b.start;
                     if (la != lb) return la > lb;
                     return a.start < b.start;
                   });
  std::vector<Mention> kept;
  for (const Mention& m : order) {
    bool clashes = std::any_of(kept.begin(), kept.end(), [&](const Mention& k) {
      return m.start < k.end && k.start < m.end;
    });
    if (!clashes) kept.push_back(m);
  }
  std::sort(kept.begin(), kept.end(),
            [](const Mention& a, const Mention& b) { return a.start < b.start; });

  TaggedSentence out;
  out.tokens = tokens;
  out.tags.assign(tokens.size(), "O");
  for (const Mention& m : kept) {
    bool first = true;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (tokens[t].start < m.end && m.start < tokens[t].end &&
          out.tags[t] == "O") {
        out.tags[t] = (first ? "B-" : "I-") + m.label;
        first = false;
      }
    }
  }
  return out;
}

std::vector<Mention> from_bio(const TaggedSentence& tagged,
                              const std::u32string& text) {
  std::vector<Mention> mentions;
  std::string open_label;
  std::size_t run_first = 0, run_last = 0;

  auto flush = [&](std::size_t last_token) {
    if (open_label.empty()) return;
    Mention m;
    m.start = tagged.tokens[run_first].start;
    m.end = tagged.tokens[last_token].end;
    m.label = open_label;
    m.surface = utf8::encode(text.substr(m.start, m.end - m.start));
    mentions.push_back(std::move(m));
    open_label.clear();
  };

  for (std::size_t t = 0; t < tagged.tags.size(); ++t) {
    const std::string& tag = tagged.tags[t];
    if (tag == "O" || tag.size() < 3) {
      flush(run_last);
      continue;
    }
    const std::string label = tag.substr(2);
    const bool continues = tag[0] == 'I' && label == open_label;
    if (!continues) {
      // A fresh B-run; a dangling I is repaired by starting one here.
      flush(run_last);
      open_label = label;
      run_first = t;
    }
    run_last = t;
  }
  flush(run_last);
  return mentions;
}

std::vector<CodeRanking> parse_coding_tsv(const std::string& content) {
  std::vector<CodeRanking> rankings;
  std::map<std::string, std::size_t> index;
  const auto lines = split_lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = split_on(lines[i], '\t');
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
      throw ParseError(i + 1, "coding row must be 'doc_id\\tcode'");
    auto [it, fresh] = index.try_emplace(fields[0], rankings.size());
    if (fresh) rankings.push_back({fields[0], {}});
    rankings[it->second].codes.push_back(fields[1]);
  }
  return rankings;
}

std::string write_coding_tsv(const std::vector<CodeRanking>& rankings) {
  std::ostringstream out;
  for (const CodeRanking& r : rankings)
    for (const std::string& code : r.codes) out << r.doc_id << '\t' << code << '\n';
  return out.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path.string());
  out << content;
}

std::vector<Document> load_corpus_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw ConfigError("corpus directory does not exist: " + dir.string());
  std::vector<std::filesystem::path> txts;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".txt")
      txts.push_back(entry.path());
  std::sort(txts.begin(), txts.end());

  std::vector<Document> docs;
  for (const auto& txt : txts) {
    Document doc;
    doc.doc_id = txt.stem().string();
    doc.text = read_file(txt);
    auto ann = txt;
    ann.replace_extension(".ann");
    if (std::filesystem::exists(ann)) {
      doc.mentions = parse_ann(read_file(ann));
      const auto text32 = utf8::decode(doc.text);
      for (const Mention& m : doc.mentions) {
        if (m.end > text32.size())
          throw ParseError("document " + doc.doc_id + ": mention [" +
                           std::to_string(m.start) + "," + std::to_string(m.end) +
                           ") exceeds text length");
        if (utf8::encode(text32.substr(m.start, m.end - m.start)) != m.surface)
          throw ParseError("document " + doc.doc_id +
                           ": mention surface does not match text at [" +
                           std::to_string(m.start) + "," + std::to_string(m.end) + ")");
      }
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::map<std::string, std::vector<Mention>> load_ann_dir(
    const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw ConfigError("annotation directory does not exist: " + dir.string());
  std::map<std::string, std::vector<Mention>> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".ann")
      out[entry.path().stem().string()] = parse_ann(read_file(entry.path()));
  return out;
}

void write_ann_dir(const std::filesystem::path& dir,
                   const std::vector<Document>& docs) {
  std::filesystem::create_directories(dir);
  for (const Document& doc : docs)
    write_file(dir / (doc.doc_id + ".ann"), write_ann(doc.mentions));
}

}  // namespace nlnde
