#include <algorithm>
#include <cctype>
#include <set>

#include "clarify/agents.hpp"

namespace clarify {

namespace {

// Function words that never serve as an antecedent or head noun.
const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> words{
      "a",     "an",    "the",   "of",    "in",   "on",     "for",   "to",    "from",  "by",    "with",
      "at",    "into",  "about", "is",    "are",  "was",    "were",  "be",    "been",  "being", "am",
      "do",    "does",  "did",   "can",   "could", "would", "should", "will", "shall", "may",   "might",
      "must",  "have",  "has",   "had",   "i",    "me",     "my",    "you",   "your",  "we",    "our",
      "us",    "they",  "them",  "their", "he",   "she",    "his",   "her",   "its",   "what",  "which",
      "who",   "whom",  "whose", "when",  "where", "why",   "how",   "please", "and",  "or",    "not",
      "no",    "yes",   "if",    "as",    "so",   "than",   "then",  "there", "here",  "any",   "all",
      "some",  "one",   "ok",    "okay",  "thanks", "thank", "hi",   "hello", "this",  "that",  "it",
      "these", "those", "show",  "list",  "tell", "give",   "get",   "find",  "referencing", "referring",
      "mean",  "using", "used",  "use",   "over", "very",   "just",  "also",  "too",   "only",  "now"};
  return words;
}

// Words that signal a recognizable request: verbs and question words.
const std::set<std::string, std::less<>>& intent_words() {
  static const std::set<std::string, std::less<>> words{
      "what",    "which",   "who",     "when",     "where",   "why",      "how",     "show",   "list",
      "give",    "tell",    "get",     "find",     "display", "explain",  "describe", "create", "delete",
      "remove",  "add",     "update",  "count",    "compare", "confirm",  "check",   "export", "import",
      "ingest",  "activate", "build",  "make",     "help",    "define",   "is",      "are",    "can",
      "could",   "does",    "do",      "search",   "lookup",  "view",     "open",    "run",    "schedule",
      "enable",  "disable", "fetch",   "summarize", "edit",   "rename",   "set",     "send",   "why"};
  return words;
}

bool contains(const std::set<std::string, std::less<>>& s, std::string_view w) { return s.find(w) != s.end(); }

bool is_content_word(std::string_view w) { return w.size() >= 2 && !contains(stopwords(), w); }

// Plural-insensitive token equality: "dataset" ~ "datasets".
bool same_noun(std::string_view a, std::string_view b) {
  if (a == b) return true;
  auto strip = [](std::string_view w) {
    return (w.size() > 3 && w.back() == 's') ? w.substr(0, w.size() - 1) : w;
  };
  return strip(a) == strip(b);
}

struct Reference {
  std::string word;
  std::optional<std::string> head_noun;  // set for determiner use ("this dataset")
};

}  // namespace

GenericAmbiguityAgent::GenericAmbiguityAgent(AgentDescriptor descriptor, GenericAgentOptions options)
    : Agent(std::move(descriptor)), options_(std::move(options)) {
  for (auto& w : options_.reference_words) w = text::to_lower(w);
  for (const auto& phrase : options_.scope_phrases) {
    auto toks = text::words(phrase);
    if (!toks.empty()) scope_phrases_.push_back(std::move(toks));
  }
}

AgentReport GenericAmbiguityAgent::detect(const AgentContext& ctx) const {
  const auto tokens = text::words(ctx.query.text);

  // Contextual: a reference word with nothing in recent history it could
  // point at.
  std::vector<Reference> refs;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& w = tokens[i];
    if (std::find(options_.reference_words.begin(), options_.reference_words.end(), w) ==
        options_.reference_words.end()) {
      continue;
    }
    // "datasets that failed": a relative "that" attaches to the noun before it.
    if (w == "that" && i > 0 && is_content_word(tokens[i - 1])) continue;
    Reference r{w, std::nullopt};
    if (w != "it" && i + 1 < tokens.size() && is_content_word(tokens[i + 1])) r.head_noun = tokens[i + 1];
    refs.push_back(std::move(r));
  }

  const std::size_t window = std::min(options_.history_window, ctx.history.size());
  std::vector<std::vector<std::string>> recent;
  for (std::size_t i = ctx.history.size() - window; i < ctx.history.size(); ++i) {
    recent.push_back(text::words(ctx.history[i].text));
  }
  auto has_antecedent = [&](const Reference& r) {
    for (const auto& turn : recent) {
      for (const auto& w : turn) {
        if (r.head_noun ? same_noun(w, *r.head_noun) : is_content_word(w)) return true;
      }
    }
    return false;
  };

  std::optional<AmbiguityType> type;
  std::vector<std::string> details;
  for (const auto& r : refs) {
    if (has_antecedent(r)) continue;
    type = type.value_or(AmbiguityType::Contextual);
    details.push_back("the reference \"" + r.word + "\"" + (r.head_noun ? " (" + r.word + " " + *r.head_noun + ")" : "") +
                      " has no antecedent in the conversation");
    break;
  }

  // Syntactic: a bare token with no request in it.
  const bool has_intent = std::any_of(tokens.begin(), tokens.end(),
                                      [](const std::string& w) { return contains(intent_words(), w); });
  if (tokens.size() <= 1 && !has_intent) {
    type = type.value_or(AmbiguityType::Syntactic);
    details.push_back("no intent can be identified in \"" + ctx.query.text + "\"");
  }

  // Aleatoric: an open-ended time or scope phrase.
  for (const auto& phrase : scope_phrases_) {
    auto it = std::search(tokens.begin(), tokens.end(), phrase.begin(), phrase.end());
    if (it == tokens.end()) continue;
    type = type.value_or(AmbiguityType::Aleatoric);
    details.push_back("the scope of \"" + text::join(phrase, " ") + "\" is not specified");
    break;
  }

  if (!type) return nothing_found();
  std::string detail = text::join(details, "; ");
  detail[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(detail[0])));
  return AgentReport(id(), descriptor().description, true, type, detail + ".", {}, {});
}

}  // namespace clarify
