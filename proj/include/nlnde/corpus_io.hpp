#ifndef NLNDE_CORPUS_IO_HPP
#define NLNDE_CORPUS_IO_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nlnde {

// A typed text span. Offsets index Unicode scalar values of the document
// text, start inclusive, end exclusive. `code` is empty when the mention
// has not been normalized yet.
struct Mention {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;
  std::string label;
  std::string code;

  friend bool operator==(const Mention&, const Mention&) = default;
};

struct Document {
  std::string doc_id;
  std::string text;  // UTF-8
  std::vector<Mention> mentions;
};

struct Token {
  std::string text;  // UTF-8
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

struct TaggedSentence {
  std::vector<Token> tokens;
  std::vector<std::string> tags;  // BIO, aligned with tokens
};

struct SentenceRange {
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const SentenceRange&, const SentenceRange&) = default;
};

// Ordered list of unique codes for one document; position is the rank.
struct CodeRanking {
  std::string doc_id;
  std::vector<std::string> codes;

  friend bool operator==(const CodeRanking&, const CodeRanking&) = default;
};

// Standoff annotation text:
//   T<n>\t<LABEL> <start> <end>\t<surface>
//   #<n>\tAnnotatorNotes T<m>\t<code>
// Throws ParseError (with line number) on malformed lines or notes that
// reference an unknown T-id.
std::vector<Mention> parse_ann(const std::string& content);

// Inverse of parse_ann. T-ids are assigned 1..n in input order; a note line
// follows each coded mention.
std::string write_ann(const std::vector<Mention>& mentions);

// Whitespace-and-punctuation base tokenization followed by the custom
// splitting rules, applied per token in order:
//   suffix: a trailing "." or "-" becomes its own token
//   prefix: a leading "-" becomes its own token
//   infix:  hyphens, punctuation and quotation marks inside a token split
//           it, the separator becoming its own token
// Offsets always index the original text.
std::vector<Token> tokenize(const std::u32string& text);
std::vector<Token> tokenize(const std::string& text);

// Sentence boundaries at newlines and at "." followed by whitespace and an
// uppercase letter. Ranges are trimmed of surrounding whitespace.
std::vector<SentenceRange> split_sentences(const std::u32string& text);
std::vector<SentenceRange> split_sentences(const std::string& text);

// split_sentences + tokenize per sentence; token offsets index the whole
// document. Sentences that tokenize to nothing are dropped.
std::vector<std::vector<Token>> sentence_tokens(const std::string& text);

// Character-offset mentions -> BIO tags over `tokens`. Overlapping mentions
// are resolved to one by keeping the longest (ties -> smaller start). A
// mention claims every token whose character range intersects it.
TaggedSentence to_bio(const std::vector<Token>& tokens,
                      const std::vector<Mention>& mentions);

// BIO tags -> mentions, one per maximal B-I+ run. An I-tag without a
// matching head is repaired by treating it as B. Surfaces are cut from
// `text`, which must be the string the tokens index into.
std::vector<Mention> from_bio(const TaggedSentence& tagged,
                              const std::u32string& text);

// Coding TSV: `doc_id\tcode` per row, rank implied by row order. Documents
// keep their first-appearance order.
std::vector<CodeRanking> parse_coding_tsv(const std::string& content);
std::string write_coding_tsv(const std::vector<CodeRanking>& rankings);

// Directory helpers. A corpus directory holds one .txt per document plus an
// optional sibling .ann. Document ids are file stems; loading order is
// lexicographic by id. Mentions are validated against the text.
std::vector<Document> load_corpus_dir(const std::filesystem::path& dir);
std::map<std::string, std::vector<Mention>> load_ann_dir(
    const std::filesystem::path& dir);
void write_ann_dir(const std::filesystem::path& dir,
                   const std::vector<Document>& docs);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace nlnde

#endif  // NLNDE_CORPUS_IO_HPP
