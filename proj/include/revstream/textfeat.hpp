#pragma once

// Content features of a review: POS ratios, counters, readability, sentiment,
// emotions, and the unigram/bigram word-gram representation.

#include <algorithm>
#include <cctype>
#include <deque>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "revstream/resources_data.hpp"
#include "revstream/types.hpp"

namespace revstream::textfeat {

enum class DatasetProfile { yelp, mediawiki };

inline const char* to_string(DatasetProfile p) { return p == DatasetProfile::yelp ? "yelp" : "mediawiki"; }

inline std::optional<DatasetProfile> parse_profile(std::string_view s) {
  if (s == "yelp") return DatasetProfile::yelp;
  if (s == "mediawiki") return DatasetProfile::mediawiki;
  return std::nullopt;
}

inline constexpr double kWordsPerSecond = 3.83;

inline constexpr std::array<std::string_view, 5> kEmotions = {"anger", "fear", "happiness",
                                                              "sadness", "surprise"};

// ---------------------------------------------------------------------------
// Lexicons

struct LexiconEntry {
  double polarity = 0.0;
  std::array<bool, 5> emotions{};
};

struct Lexicons {
  std::unordered_set<std::string> stop_words;
  std::unordered_set<std::string> easy_words;
  std::unordered_map<std::string, LexiconEntry> sentiment;

  static Lexicons from_text(std::string_view stop, std::string_view sentiment,
                            std::string_view easy);

  /// Lists compiled into the library from resources/.
  static const Lexicons& builtin() {
    static const Lexicons lex = from_text(resources::kStopWords, resources::kSentimentLexicon,
                                          resources::kEasyWords);
    return lex;
  }

  /// Loads stopwords.txt, sentiment_lexicon.tsv and easy_words.txt from `dir`.
  static Lexicons load(const std::filesystem::path& dir) {
    auto slurp = [&](const char* name) {
      std::ifstream in(dir / name);
      if (!in) throw std::runtime_error("cannot read resource " + (dir / name).string());
      std::stringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    return from_text(slurp("stopwords.txt"), slurp("sentiment_lexicon.tsv"),
                     slurp("easy_words.txt"));
  }
};

namespace detail {

inline std::vector<std::string_view> resource_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty() && line.front() != '#') out.push_back(line);
    pos = nl + 1;
  }
  return out;
}

}  // namespace detail

inline Lexicons Lexicons::from_text(std::string_view stop, std::string_view sentiment,
                                    std::string_view easy) {
  Lexicons lex;
  for (auto line : detail::resource_lines(stop)) lex.stop_words.emplace(line);
  for (auto line : detail::resource_lines(easy)) lex.easy_words.emplace(line);
  for (auto line : detail::resource_lines(sentiment)) {
    auto t1 = line.find('\t');
    if (t1 == std::string_view::npos) continue;
    auto t2 = line.find('\t', t1 + 1);
    std::string word(line.substr(0, t1));
    auto pol = line.substr(t1 + 1, t2 == std::string_view::npos ? std::string_view::npos
                                                                 : t2 - t1 - 1);
    LexiconEntry e;
    e.polarity = std::stod(std::string(pol));
    if (t2 != std::string_view::npos) {
      std::string tags(line.substr(t2 + 1));
      std::stringstream ss(tags);
      std::string tag;
      while (std::getline(ss, tag, ',')) {
        for (std::size_t i = 0; i < kEmotions.size(); ++i)
          if (tag == kEmotions[i]) e.emotions[i] = true;
      }
    }
    lex.sentiment.emplace(std::move(word), e);
  }
  return lex;
}

// ---------------------------------------------------------------------------
// Tokenizer

enum class TokenKind { word, number, punct, url };

struct Token {
  TokenKind kind;
  std::string text;
};

namespace detail {

inline bool is_ascii_alpha(unsigned char c) { return std::isalpha(c) != 0; }
inline bool is_ascii_digit(unsigned char c) { return c >= '0' && c <= '9'; }
inline bool is_space(unsigned char c) { return c == ' ' || (c >= '\t' && c <= '\r'); }

inline std::size_t utf8_len(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

// Unicode punctuation we recognize outside ASCII: general punctuation block quotes,
// dashes, ellipsis, plus inverted marks and guillemets.
inline bool is_unicode_punct(std::string_view s, std::size_t pos, std::size_t len) {
  auto b = [&](std::size_t i) { return static_cast<unsigned char>(s[pos + i]); };
  if (len == 3 && b(0) == 0xE2 && b(1) == 0x80) {
    unsigned c = b(2);
    return (c >= 0x90 && c <= 0x9F) || c == 0xA6;  // U+2010..U+201F, U+2026
  }
  if (len == 2 && b(0) == 0xC2) {
    unsigned c = b(1);
    return c == 0xA1 || c == 0xAB || c == 0xBB || c == 0xBF;
  }
  return false;
}

inline bool is_ascii_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

inline bool starts_with_ci(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (s.size() - pos < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(s[pos + i])) != prefix[i]) return false;
  return true;
}

inline bool url_at(std::string_view s, std::size_t pos) {
  if (pos > 0) {
    auto prev = static_cast<unsigned char>(s[pos - 1]);
    if (is_ascii_alpha(prev) || is_ascii_digit(prev) || prev == '_') return false;
  }
  return starts_with_ci(s, pos, "http://") || starts_with_ci(s, pos, "https://") ||
         starts_with_ci(s, pos, "www.");
}

inline constexpr std::string_view kUrlTrailing = ".,;:!?)]}'\"";

inline std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace detail

/// Splits text into words, numbers, punctuation runs and URLs. Whitespace separates
/// tokens; apostrophes and hyphens inside a word stay in the word.
inline std::vector<Token> tokenize(std::string_view s) {
  using namespace detail;
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    auto c = static_cast<unsigned char>(s[i]);
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (url_at(s, i)) {
      std::size_t j = i;
      while (j < n && !is_space(static_cast<unsigned char>(s[j]))) ++j;
      std::size_t end = j;
      while (end > i && kUrlTrailing.find(s[end - 1]) != std::string_view::npos) --end;
      out.push_back({TokenKind::url, std::string(s.substr(i, end - i))});
      i = end;
      continue;
    }
    auto len = utf8_len(c);
    bool punct = is_ascii_punct(c) || (len > 1 && i + len <= n && is_unicode_punct(s, i, len));
    if (punct) {
      std::size_t j = i;
      while (j < n) {
        auto cj = static_cast<unsigned char>(s[j]);
        auto lj = utf8_len(cj);
        bool pj = is_ascii_punct(cj) || (lj > 1 && j + lj <= n && is_unicode_punct(s, j, lj));
        if (!pj || url_at(s, j)) break;
        j += lj;
      }
      out.push_back({TokenKind::punct, std::string(s.substr(i, j - i))});
      i = j;
      continue;
    }
    // word or number: letters, digits, non-ASCII letters, joined by ' or - when
    // followed by another word character.
    std::size_t j = i;
    bool has_letter = false;
    while (j < n) {
      auto cj = static_cast<unsigned char>(s[j]);
      auto lj = utf8_len(cj);
      if (is_ascii_alpha(cj)) {
        has_letter = true;
        ++j;
      } else if (is_ascii_digit(cj)) {
        ++j;
      } else if (cj >= 0x80 && !(j + lj <= n && is_unicode_punct(s, j, lj))) {
        has_letter = true;
        j += std::min(lj, n - j);
      } else if ((cj == '\'' || cj == '-' || ((cj == '.' || cj == ',') && !has_letter)) &&
                 j + 1 < n && j > i) {
        auto nx = static_cast<unsigned char>(s[j + 1]);
        bool joins = (cj == '.' || cj == ',') ? is_ascii_digit(nx)
                                              : (is_ascii_alpha(nx) || nx >= 0x80);
        if (!joins) break;
        ++j;
      } else {
        break;
      }
    }
    out.push_back({has_letter ? TokenKind::word : TokenKind::number,
                   std::string(s.substr(i, j - i))});
    i = j;
  }
  return out;
}

/// Number of Unicode code points.
inline std::size_t char_count(std::string_view s) {
  std::size_t count = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++count;
  return count;
}

inline std::size_t url_count(std::string_view s) {
  std::size_t n = 0;
  for (const auto& t : tokenize(s)) n += t.kind == TokenKind::url;
  return n;
}

// ---------------------------------------------------------------------------
// Readability

/// Vowel-group syllable count. Vowels are a, e, i, o, u, y. A final silent "e" is
/// dropped when the word has more than one group, unless the word ends in
/// consonant + "le". Every word with a letter has at least one syllable.
inline int count_syllables(std::string_view word) {
  std::string w;
  for (unsigned char c : word)
    if (detail::is_ascii_alpha(c)) w.push_back(static_cast<char>(std::tolower(c)));
  if (w.empty()) return word.empty() ? 0 : 1;
  auto vowel = [](char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
  };
  int groups = 0;
  bool prev = false;
  for (char c : w) {
    bool v = vowel(c);
    if (v && !prev) ++groups;
    prev = v;
  }
  const auto n = w.size();
  if (groups > 1 && w[n - 1] == 'e') {
    bool consonant_le = n >= 3 && w[n - 2] == 'l' && !vowel(w[n - 3]);
    bool vowel_before = vowel(w[n - 2]);
    if (!consonant_le && !vowel_before) --groups;
  }
  return std::max(groups, 1);
}

inline int letter_count(std::string_view word) {
  int n = 0;
  for (unsigned char c : word) n += detail::is_ascii_alpha(c) || c >= 0xC0;
  return n;
}

struct TextCounts {
  int words = 0;
  int sentences = 0;
  int syllables = 0;
  int miniwords = 0;
};

/// Words are word tokens; sentences are runs of . ! ? plus a trailing unterminated
/// sentence when words follow the last terminator.
inline TextCounts text_counts(const std::vector<Token>& toks) {
  TextCounts c;
  bool words_since_terminator = false;
  for (const auto& t : toks) {
    if (t.kind == TokenKind::word) {
      ++c.words;
      c.syllables += count_syllables(t.text);
      if (letter_count(t.text) <= 3) ++c.miniwords;
      words_since_terminator = true;
    } else if (t.kind == TokenKind::punct &&
               t.text.find_first_of(".!?") != std::string::npos) {
      if (words_since_terminator) ++c.sentences;
      words_since_terminator = false;
    }
  }
  if (words_since_terminator) ++c.sentences;
  return c;
}

inline double flesch_score(std::string_view text) {
  auto c = text_counts(tokenize(text));
  if (c.words == 0) return 0.0;
  double sentences = std::max(c.sentences, 1);
  double words = c.words;
  return 206.835 - 1.015 * (words / sentences) - 84.6 * (c.syllables / words);
}

/// McAlpine EFLAW: (words + miniwords) / sentences; miniwords have at most 3 letters.
inline double mcalpine_eflaw(std::string_view text) {
  auto c = text_counts(tokenize(text));
  if (c.words == 0) return 0.0;
  return static_cast<double>(c.words + c.miniwords) / std::max(c.sentences, 1);
}

inline constexpr double kEflawUnfavorableAbove = 25.0;

// ---------------------------------------------------------------------------
// POS heuristics

enum class Pos { adjective, adverb, interjection, noun, pronoun, verb, other };

namespace detail {

inline const std::unordered_set<std::string_view>& pronouns() {
  static const std::unordered_set<std::string_view> s = {
      "i", "me", "my", "mine", "myself", "we", "us", "our", "ours", "ourselves", "you",
      "your", "yours", "yourself", "yourselves", "he", "him", "his", "himself", "she", "her",
      "hers", "herself", "it", "its", "itself", "they", "them", "their", "theirs",
      "themselves", "who", "whom", "whose", "someone", "somebody", "something", "anyone",
      "anybody", "anything", "everyone", "everybody", "everything", "nobody", "nothing",
      "i'm", "i've", "i'd", "i'll", "you're", "you've", "we're", "we've", "they're",
      "it's", "he's", "she's"};
  return s;
}

inline const std::unordered_set<std::string_view>& interjections() {
  static const std::unordered_set<std::string_view> s = {
      "oh", "ah", "wow", "hey", "ouch", "oops", "yay", "ugh", "hmm", "hm", "uh", "um",
      "yeah", "yes", "no", "nope", "yep", "alas", "bravo", "hooray", "omg", "lol", "please",
      "thanks", "hello", "hi", "bye", "whoa", "meh", "yum", "yikes", "damn", "gosh", "aw",
      "aww", "eh", "huh", "ok", "okay"};
  return s;
}

// Determiners, prepositions, conjunctions, auxiliaries, particles: left untagged.
inline const std::unordered_set<std::string_view>& function_words() {
  static const std::unordered_set<std::string_view> s = {
      "a", "an", "the", "this", "that", "these", "those", "some", "any", "each", "every",
      "either", "neither", "all", "both", "no", "another", "such", "what", "which",
      "of", "in", "on", "at", "by", "for", "with", "about", "against", "between", "into",
      "through", "during", "before", "after", "above", "below", "to", "from", "up", "down",
      "out", "off", "over", "under", "around", "near", "without", "within", "upon", "across",
      "behind", "beyond", "via", "per", "than", "like",
      "and", "but", "or", "nor", "so", "yet", "if", "because", "as", "until", "while",
      "although", "though", "unless", "whether",
      "be", "am", "is", "are", "was", "were", "been", "being", "have", "has", "had",
      "having", "do", "does", "did", "will", "would", "shall", "should", "can", "could",
      "may", "might", "must", "not", "n't", "to", "'s"};
  return s;
}

inline const std::unordered_set<std::string_view>& adverbs() {
  static const std::unordered_set<std::string_view> s = {
      "very", "too", "also", "never", "always", "often", "sometimes", "just", "still",
      "already", "soon", "now", "then", "here", "there", "again", "almost", "quite",
      "rather", "even", "ever", "maybe", "perhaps", "well", "much", "more", "most", "less",
      "least", "only", "really", "pretty", "so", "back", "away", "once", "twice", "today",
      "tomorrow", "yesterday", "tonight", "everywhere", "somewhere", "anywhere", "definitely",
      "probably", "however", "instead", "anyway", "otherwise", "together", "yet", "seldom",
      "when", "where", "why", "how"};
  return s;
}

inline const std::unordered_set<std::string_view>& adjectives() {
  static const std::unordered_set<std::string_view> s = {
      "good", "great", "bad", "nice", "best", "better", "worse", "worst", "new", "old",
      "big", "small", "little", "large", "long", "short", "high", "low", "hot", "cold",
      "fresh", "clean", "dirty", "cheap", "expensive", "friendly", "lovely", "ugly", "happy",
      "sad", "rude", "slow", "fast", "quick", "late", "early", "amazing", "awesome",
      "terrible", "horrible", "awful", "excellent", "perfect", "fine", "free", "full",
      "empty", "nice", "tasty", "yummy", "bland", "real", "fake", "sure", "true", "false",
      "right", "wrong", "easy", "hard", "busy", "quiet", "loud", "strange", "weird",
      "favorite", "mad", "angry", "glad", "sorry", "poor", "rich", "huge", "tiny", "dry",
      "wet", "warm", "sweet", "sour", "salty", "spicy", "crispy", "greasy", "soggy", "stale",
      "overpriced", "same", "other", "own", "few", "many", "several", "whole", "next", "last",
      "first", "second", "main", "decent", "solid", "average", "fair"};
  return s;
}

inline const std::unordered_set<std::string_view>& verbs() {
  static const std::unordered_set<std::string_view> s = {
      "go", "went", "gone", "get", "got", "gotten", "make", "made", "take", "took", "taken",
      "come", "came", "see", "saw", "seen", "know", "knew", "known", "think", "thought",
      "say", "said", "tell", "told", "give", "gave", "given", "find", "found", "eat", "ate",
      "eaten", "drink", "drank", "buy", "bought", "pay", "paid", "try", "tried", "want",
      "need", "like", "love", "hate", "recommend", "order", "ask", "wait", "leave", "left",
      "keep", "kept", "feel", "felt", "look", "seem", "let", "put", "bring", "brought",
      "sit", "sat", "stand", "stood", "run", "ran", "win", "won", "lose", "lost", "visit",
      "call", "use", "serve", "enjoy", "return", "check", "click", "buy", "sell", "sold",
      "become", "became", "begin", "began", "begun", "write", "wrote", "written", "read",
      "hear", "heard", "meet", "met", "help", "work", "live", "stay", "play", "show",
      "taste", "cook", "open", "close", "start", "stop", "miss", "complain", "deliver",
      "reply", "supply", "apply", "rely", "fly"};
  return s;
}

inline const std::unordered_set<std::string_view>& ly_adjectives() {
  static const std::unordered_set<std::string_view> s = {
      "friendly", "lovely", "ugly", "holy", "early", "silly", "likely", "lonely", "daily",
      "weekly", "monthly", "yearly", "costly", "elderly", "curly", "deadly", "lively", "oily",
      "bubbly"};
  return s;
}

// Words ending in -ly that are neither adverbs nor adjectives.
inline const std::unordered_set<std::string_view>& ly_nouns() {
  static const std::unordered_set<std::string_view> s = {"family", "july", "italy", "belly",
                                                         "jelly", "rally", "ally", "bully"};
  return s;
}

inline bool ends_with(std::string_view w, std::string_view suf) {
  return w.size() > suf.size() && w.substr(w.size() - suf.size()) == suf;
}

}  // namespace detail

/// Heuristic part-of-speech tag for a lowercased word token.
inline Pos tag_word(std::string_view w) {
  using namespace detail;
  if (pronouns().count(w)) return Pos::pronoun;
  if (interjections().count(w)) return Pos::interjection;
  if (function_words().count(w)) return Pos::other;
  if (adverbs().count(w)) return Pos::adverb;
  if (adjectives().count(w) || ly_adjectives().count(w)) return Pos::adjective;
  if (verbs().count(w)) return Pos::verb;
  if (ly_nouns().count(w)) return Pos::noun;
  if (w.size() > 4 && ends_with(w, "ly")) return Pos::adverb;
  for (std::string_view suf : {"ous", "ful", "ive", "able", "ible", "less", "ish", "ic",
                               "est", "ical", "ary"})
    if (w.size() > suf.size() + 2 && ends_with(w, suf)) return Pos::adjective;
  for (std::string_view suf : {"ed", "ing", "ize", "ise", "ify", "ized", "ated"})
    if (w.size() > suf.size() + 2 && ends_with(w, suf)) return Pos::verb;
  return Pos::noun;
}

// ---------------------------------------------------------------------------
// Sentiment and emotion

struct SentimentScores {
  double polarity = 0.0;
  std::array<double, 5> emotions{};
};

/// Lexicon scoring: polarity is the mean score of matched tokens, a match preceded by
/// not/never/no contributes -0.5 x its score; each emotion is its share of all
/// matched emotion tags.
inline SentimentScores polarity_and_emotion(std::string_view text,
                                            const Lexicons& lex = Lexicons::builtin()) {
  SentimentScores out;
  double pol_sum = 0.0;
  int pol_n = 0;
  std::array<int, 5> tag_counts{};
  int tag_total = 0;
  std::string prev;
  for (const auto& t : tokenize(text)) {
    if (t.kind != TokenKind::word) {
      if (t.kind == TokenKind::punct) prev.clear();
      continue;
    }
    auto w = detail::lower_ascii(t.text);
    auto it = lex.sentiment.find(w);
    if (it != lex.sentiment.end()) {
      double p = it->second.polarity;
      if (prev == "not" || prev == "never" || prev == "no") p *= -0.5;
      pol_sum += p;
      ++pol_n;
      for (std::size_t e = 0; e < 5; ++e) {
        if (it->second.emotions[e]) {
          ++tag_counts[e];
          ++tag_total;
        }
      }
    }
    prev = std::move(w);
  }
  if (pol_n > 0) out.polarity = std::clamp(pol_sum / pol_n, -1.0, 1.0);
  if (tag_total > 0)
    for (std::size_t e = 0; e < 5; ++e)
      out.emotions[e] = static_cast<double>(tag_counts[e]) / tag_total;
  return out;
}

/// |rating - 2.5 * (polarity + 1)|; stored unclamped, range [0, 5].
inline double rating_polarity_deviation(int rating, double polarity) {
  return std::abs(rating - 2.5 * (polarity + 1.0));
}

// ---------------------------------------------------------------------------
// Content features

namespace keys {
inline constexpr std::string_view adjective_ratio = "adjective_ratio";
inline constexpr std::string_view adverb_ratio = "adverb_ratio";
inline constexpr std::string_view char_count = "char_count";
inline constexpr std::string_view difficult_word_count = "difficult_word_count";
inline constexpr std::string_view flesch = "flesch";
inline constexpr std::string_view interjection_ratio = "interjection_ratio";
inline constexpr std::string_view eflaw = "eflaw";
inline constexpr std::string_view noun_ratio = "noun_ratio";
inline constexpr std::string_view polarity = "polarity";
inline constexpr std::string_view pronoun_ratio = "pronoun_ratio";
inline constexpr std::string_view punctuation_ratio = "punctuation_ratio";
inline constexpr std::string_view reading_time = "reading_time_seconds";
inline constexpr std::string_view url_count = "url_count";
inline constexpr std::string_view verb_ratio = "verb_ratio";
inline constexpr std::string_view word_count = "word_count";
inline constexpr std::string_view rating_polarity_deviation = "rating_polarity_deviation";
inline constexpr std::string_view rating = "rating";
}  // namespace keys

inline std::string emotion_key(std::size_t e) { return "emotion_" + std::string(kEmotions[e]); }

struct ContentConfig {
  DatasetProfile profile = DatasetProfile::yelp;
};

/// Content features for one event. Empty text gives zero counts and ratios and the
/// readability sentinel 0.0. Passthrough `extra` columns are copied verbatim.
inline FeatureVector extract_content_features(const RawEvent& ev, const ContentConfig& cfg = {},
                                              const Lexicons& lex = Lexicons::builtin()) {
  FeatureVector f;
  const auto toks = tokenize(ev.text);
  std::array<int, 7> pos_counts{};
  int punct = 0, urls = 0;
  std::set<std::string> difficult;
  for (const auto& t : toks) {
    switch (t.kind) {
      case TokenKind::punct: ++punct; break;
      case TokenKind::url: ++urls; break;
      case TokenKind::number: break;
      case TokenKind::word: {
        auto w = detail::lower_ascii(t.text);
        ++pos_counts[static_cast<std::size_t>(tag_word(w))];
        if (count_syllables(w) >= 3 && !lex.easy_words.count(w)) difficult.insert(w);
        break;
      }
    }
  }
  const double total = static_cast<double>(toks.size());
  auto ratio = [&](Pos p) {
    return total > 0 ? pos_counts[static_cast<std::size_t>(p)] / total : 0.0;
  };
  const auto counts = text_counts(toks);

  f[std::string(keys::adjective_ratio)] = ratio(Pos::adjective);
  f[std::string(keys::adverb_ratio)] = ratio(Pos::adverb);
  f[std::string(keys::interjection_ratio)] = ratio(Pos::interjection);
  f[std::string(keys::noun_ratio)] = ratio(Pos::noun);
  f[std::string(keys::pronoun_ratio)] = ratio(Pos::pronoun);
  f[std::string(keys::verb_ratio)] = ratio(Pos::verb);
  f[std::string(keys::punctuation_ratio)] = total > 0 ? punct / total : 0.0;
  f[std::string(keys::char_count)] = static_cast<double>(char_count(ev.text));
  f[std::string(keys::word_count)] = counts.words;
  f[std::string(keys::difficult_word_count)] = static_cast<double>(difficult.size());
  f[std::string(keys::url_count)] = urls;
  f[std::string(keys::reading_time)] = counts.words / kWordsPerSecond;
  f[std::string(keys::flesch)] = flesch_score(ev.text);
  f[std::string(keys::eflaw)] = mcalpine_eflaw(ev.text);

  const auto senti = polarity_and_emotion(ev.text, lex);
  f[std::string(keys::polarity)] = senti.polarity;
  for (std::size_t e = 0; e < kEmotions.size(); ++e) f[emotion_key(e)] = senti.emotions[e];

  if (cfg.profile == DatasetProfile::yelp) {
    f[std::string(keys::rating)] = ev.rating ? *ev.rating : 0.0;
    f[std::string(keys::rating_polarity_deviation)] =
        ev.rating ? rating_polarity_deviation(*ev.rating, senti.polarity) : 0.0;
  }
  for (const auto& [k, v] : ev.extra) f[k] = v;
  return f;
}

// ---------------------------------------------------------------------------
// Word-grams

/// Suffix-stripping lemmatizer: plural and verb-inflection endings.
inline std::string stem(std::string w) {
  auto ends = [&](std::string_view s) {
    return w.size() >= s.size() && std::string_view(w).substr(w.size() - s.size()) == s;
  };
  auto has_vowel = [](std::string_view s) {
    return s.find_first_of("aeiouy") != std::string_view::npos;
  };
  auto undouble = [&] {
    auto n = w.size();
    if (n >= 2 && w[n - 1] == w[n - 2] && w[n - 1] != 'l' && w[n - 1] != 's' &&
        w[n - 1] != 'z' && std::string_view("aeiouy").find(w[n - 1]) == std::string_view::npos)
      w.pop_back();
  };
  if (w.size() <= 3) return w;
  if (ends("ies") && w.size() > 4) {
    w.replace(w.size() - 3, 3, "y");
  } else if (ends("sses")) {
    w.resize(w.size() - 2);
  } else if (ends("ss") || ends("us") || ends("is")) {
    // keep
  } else if (ends("s")) {
    w.pop_back();
  }
  if (ends("ing") && w.size() >= 6 && has_vowel(std::string_view(w).substr(0, w.size() - 3))) {
    w.resize(w.size() - 3);
    undouble();
  } else if (ends("ied") && w.size() > 4) {
    w.replace(w.size() - 3, 3, "y");
  } else if (ends("ed") && w.size() >= 5 &&
             has_vowel(std::string_view(w).substr(0, w.size() - 2))) {
    w.resize(w.size() - 2);
    undouble();
  }
  return w;
}

/// Lowercased, stemmed alphabetic tokens with stop words, URLs, digits and punctuation
/// removed.
inline std::vector<std::string> gram_tokens(std::string_view text,
                                            const Lexicons& lex = Lexicons::builtin()) {
  std::vector<std::string> out;
  for (const auto& t : tokenize(text)) {
    if (t.kind != TokenKind::word) continue;
    // Split on inner apostrophes/hyphens and keep pure-letter pieces.
    std::string piece;
    auto flush = [&] {
      if (piece.size() >= 2 && !lex.stop_words.count(piece)) {
        auto s = stem(piece);
        if (!lex.stop_words.count(s)) out.push_back(std::move(s));
      }
      piece.clear();
    };
    for (unsigned char c : t.text) {
      if (detail::is_ascii_alpha(c))
        piece.push_back(static_cast<char>(std::tolower(c)));
      else
        flush();
    }
    flush();
  }
  return out;
}

/// Unigram and bigram counts of one document, before document-frequency filtering.
inline WordGramRow raw_wordgrams(std::string_view text, const Lexicons& lex = Lexicons::builtin()) {
  WordGramRow row;
  auto toks = gram_tokens(text, lex);
  for (std::size_t i = 0; i < toks.size(); ++i) {
    row[toks[i]] += 1.0;
    if (i + 1 < toks.size()) row[toks[i] + " " + toks[i + 1]] += 1.0;
  }
  return row;
}

struct VocabConfig {
  double min_df = 0.1;
  double max_df = 0.7;
  std::size_t reference_docs = 2000;
  std::size_t cold_start_docs = 100;

  static VocabConfig for_profile(DatasetProfile p) {
    VocabConfig c;
    if (p == DatasetProfile::mediawiki) c.min_df = 0.01;
    return c;
  }
};

/// Running document frequencies over the trailing reference corpus.
class VocabState {
 public:
  explicit VocabState(VocabConfig cfg = {}) : cfg_(cfg) {}

  const VocabConfig& config() const noexcept { return cfg_; }
  std::size_t corpus_size() const noexcept { return docs_.size(); }

  std::size_t document_frequency(const std::string& gram) const {
    auto it = df_.find(gram);
    return it == df_.end() ? 0 : it->second;
  }

  /// Adds the document to the reference corpus, then keeps the grams whose document
  /// frequency lies in [min_df, max_df]. While the corpus holds at most
  /// `cold_start_docs` documents every gram passes.
  WordGramRow build_wordgrams(std::string_view text, const Lexicons& lex = Lexicons::builtin()) {
    auto row = raw_wordgrams(text, lex);
    std::vector<std::string> grams;
    grams.reserve(row.size());
    for (const auto& [g, _] : row) {
      grams.push_back(g);
      ++df_[g];
    }
    docs_.push_back(std::move(grams));
    if (docs_.size() > cfg_.reference_docs) {
      for (const auto& g : docs_.front()) {
        auto it = df_.find(g);
        if (--it->second == 0) df_.erase(it);
      }
      docs_.pop_front();
    }
    if (docs_.size() <= cfg_.cold_start_docs) return row;
    const double n = static_cast<double>(docs_.size());
    for (auto it = row.begin(); it != row.end();) {
      double frac = df_.at(it->first) / n;
      if (frac < cfg_.min_df || frac > cfg_.max_df)
        it = row.erase(it);
      else
        ++it;
    }
    return row;
  }

 private:
  VocabConfig cfg_;
  std::deque<std::vector<std::string>> docs_;
  std::unordered_map<std::string, std::size_t> df_;
};

}  // namespace revstream::textfeat
