#include <doctest.h>

#include <map>
#include <set>

#include "styloprof/rng.hpp"
#include "styloprof/textprep.hpp"

using namespace styloprof;

namespace {
std::vector<std::string> token_texts(const TokenStream& s) {
  std::vector<std::string> out;
  for (const auto& t : s.tokens) out.push_back(t.text);
  return out;
}

std::multiset<Chatspeak> chatspeak_kinds(const std::vector<ChatspeakToken>& cs) {
  std::multiset<Chatspeak> out;
  for (const auto& c : cs) out.insert(c.kind);
  return out;
}
}  // namespace

TEST_CASE("tokenize splits on whitespace and keeps contractions") {
  TokenStream s = tokenize("I've been here");
  CHECK(token_texts(s) == std::vector<std::string>{"i've", "been", "here"});
  CHECK(s.chatspeak.empty());
}

TEST_CASE("tokenize of empty text is an empty stream") {
  TokenStream s = tokenize("");
  CHECK(s.tokens.empty());
  CHECK(s.chatspeak.empty());
}

TEST_CASE("the sample post tokenizes into its word tokens") {
  std::string post =
      "ppl who stan her at this point are as ignorant as iggy stans i love azealias "
      "insite on racism but her mess makes it invalid";
  TokenStream s = tokenize(post);
  CHECK(s.tokens.size() == 25);
  CHECK(s.tokens.front().text == "ppl");
  CHECK(s.tokens.back().text == "invalid");
  CHECK(s.chatspeak.empty());
}

TEST_CASE("flooding placeholders") {
  auto cs = extract_chatspeak("soooo cool!!!");
  CHECK(chatspeak_kinds(cs) ==
        std::multiset<Chatspeak>{Chatspeak::CharFlood, Chatspeak::PunctFlood});
  // the flooded token is replaced by its placeholder at the token level
  TokenStream s = tokenize("soooo cool!!!");
  CHECK(token_texts(s) == std::vector<std::string>{"cool"});
  CHECK(s.token_level_sequence() ==
        std::vector<std::string>{"[char_flood]", "cool", "[punct_flood]"});
}

TEST_CASE("uppercase and emoticon placeholders") {
  auto cs = extract_chatspeak("HELP me :)");
  CHECK(chatspeak_kinds(cs) ==
        std::multiset<Chatspeak>{Chatspeak::CharUpper, Chatspeak::Emoji});
  TokenStream s = tokenize("HELP me :)");
  CHECK(token_texts(s) == std::vector<std::string>{"me", ":)"});
  CHECK(s.token_level_sequence() ==
        std::vector<std::string>{"[char_upper]", "me", ":)"});
}

TEST_CASE("known acronyms are not flagged as nonstandard capitalization") {
  TextprepOptions opts = TextprepOptions::with_default_acronyms();
  auto cs = extract_chatspeak("the FBI uses PGP", opts);
  CHECK(cs.empty());
  auto flagged = extract_chatspeak("the ACRONYMISH word", opts);
  CHECK(chatspeak_kinds(flagged) == std::multiset<Chatspeak>{Chatspeak::CharUpper});
}

TEST_CASE("punctuation-only emoticon class versus flooding") {
  // a single repeated punctuation run is flooding, mixed runs are emoticons
  CHECK(chatspeak_kinds(extract_chatspeak("!!!")) ==
        std::multiset<Chatspeak>{Chatspeak::PunctFlood});
  CHECK(chatspeak_kinds(extract_chatspeak("?!?!")) ==
        std::multiset<Chatspeak>{Chatspeak::Emoji});
  CHECK(chatspeak_kinds(extract_chatspeak("^_^")) ==
        std::multiset<Chatspeak>{Chatspeak::Emoji});
}

TEST_CASE("unicode emoji become [emoji] placeholders and survive as tokens") {
  TokenStream s = tokenize("nice \xF0\x9F\x98\x80 work");
  CHECK(chatspeak_kinds(s.chatspeak) == std::multiset<Chatspeak>{Chatspeak::Emoji});
  CHECK(token_texts(s) ==
        std::vector<std::string>{"nice", "\xF0\x9F\x98\x80", "work"});
}

TEST_CASE("placeholders carry valid source spans and only the four kinds exist") {
  Rng rng(13);
  std::vector<std::string> pool = {"soooo",   "HELP",   "fine", "ok!!", ":)",
                                   "weeeird", "?" "?!", "word", "YELL", "meh"};
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    for (int w = 0; w < 6; ++w) {
      if (w) text += ' ';
      text += pool[rng.index(pool.size())];
    }
    for (const auto& c : extract_chatspeak(text)) {
      CHECK(c.span.begin < c.span.end);
      CHECK(c.span.end <= text.size());
      bool known = c.kind == Chatspeak::CharFlood || c.kind == Chatspeak::PunctFlood ||
                   c.kind == Chatspeak::CharUpper || c.kind == Chatspeak::Emoji;
      CHECK(known);
    }
    // determinism
    auto again = extract_chatspeak(text);
    CHECK(again.size() == extract_chatspeak(text).size());
  }
}

TEST_CASE("planted chatspeak rates are recovered") {
  Rng rng(77);
  const int n_posts = 1000;
  const double flood_rate = 0.1, punct_rate = 0.2;
  int planted_flood = 0, planted_punct = 0, found_flood = 0, found_punct = 0;
  for (int i = 0; i < n_posts; ++i) {
    std::string text = "plain words here";
    if (rng.unit() < flood_rate) {
      text += " soooo";
      ++planted_flood;
    }
    if (rng.unit() < punct_rate) {
      text += " what!!";
      ++planted_punct;
    }
    for (const auto& c : extract_chatspeak(text)) {
      if (c.kind == Chatspeak::CharFlood) ++found_flood;
      if (c.kind == Chatspeak::PunctFlood) ++found_punct;
    }
  }
  CHECK(found_flood == planted_flood);
  CHECK(found_punct == planted_punct);
}

TEST_CASE("function/content split partitions the word tokens") {
  FunctionWordList fw({"the", "ive", "a", "of"});
  TokenStream s = tokenize("the dragon ive seen");
  auto [fn, content] = split_function_content(s, fw);
  CHECK(fn == std::vector<std::string>{"the", "ive"});
  CHECK(content == std::vector<std::string>{"dragon", "seen"});

  TokenStream all_fn = tokenize("the of a");
  auto [fn2, content2] = split_function_content(all_fn, fw);
  CHECK(fn2.size() == 3);
  CHECK(content2.empty());
}

TEST_CASE("function/content split is a partition on random streams") {
  FunctionWordList fw({"the", "a", "of", "and", "to"});
  Rng rng(3);
  std::vector<std::string> pool = {"the", "a", "dragon", "sees", "of", "cats", "and"};
  for (int trial = 0; trial < 50; ++trial) {
    std::string text;
    for (int w = 0; w < 8; ++w) {
      if (w) text += ' ';
      text += pool[rng.index(pool.size())];
    }
    TokenStream s = tokenize(text);
    auto [fn, content] = split_function_content(s, fw);
    CHECK(fn.size() + content.size() == s.tokens.size());
    for (const auto& t : fn) CHECK(fw.contains(t));
    for (const auto& t : content) CHECK(!fw.contains(t));
  }
}

TEST_CASE("emoticons classify as content") {
  FunctionWordList fw({"the"});
  TokenStream s = tokenize("the :)");
  auto [fn, content] = split_function_content(s, fw);
  CHECK(fn == std::vector<std::string>{"the"});
  CHECK(content == std::vector<std::string>{":)"});
}

TEST_CASE("char_ngrams slides a window over the text") {
  auto grams = char_ngrams("abc", {2});
  CHECK(grams == std::map<std::string, std::uint32_t>{{"ab", 1}, {"bc", 1}});
  auto single = char_ngrams("aaaa", {4});
  CHECK(single == std::map<std::string, std::uint32_t>{{"aaaa", 1}});
  CHECK(char_ngrams("ab", {3}).empty());
  auto with_space = char_ngrams("a b", {2});
  CHECK(with_space.at("a ") == 1);
  CHECK(with_space.at(" b") == 1);
}

TEST_CASE("char_ngram totals follow the window count") {
  Rng rng(21);
  const std::string alphabet = "abcde fg";
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t len = 1 + rng.index(200);
    std::string text;
    for (std::size_t i = 0; i < len; ++i) text += alphabet[rng.index(alphabet.size())];
    for (int n : {2, 3, 4}) {
      auto grams = char_ngrams(text, {n});
      std::size_t total = 0;
      for (auto& [g, c] : grams) total += c;
      std::size_t expected =
          text.size() >= static_cast<std::size_t>(n) ? text.size() - n + 1 : 0;
      CHECK(total == expected);
    }
  }
}

TEST_CASE("token bigrams pair adjacent sequence entries") {
  TokenStream s = tokenize("a b c");
  auto bg = token_bigrams(s);
  REQUIRE(bg.size() == 2);
  CHECK(bg[0] == std::pair<std::string, std::string>{"a", "b"});
  CHECK(bg[1] == std::pair<std::string, std::string>{"b", "c"});
  CHECK(token_bigrams(tokenize("one")).empty());
  CHECK(token_bigrams(tokenize("")).empty());
}

TEST_CASE("bigram count equals sequence length minus one") {
  Rng rng(8);
  std::vector<std::string> pool = {"a", "b!!", "soooo", "HEY", "c"};
  for (int trial = 0; trial < 50; ++trial) {
    std::string text;
    std::size_t n = rng.index(8);
    for (std::size_t w = 0; w < n; ++w) {
      if (w) text += ' ';
      text += pool[rng.index(pool.size())];
    }
    TokenStream s = tokenize(text);
    std::size_t seq = s.token_level_sequence().size();
    CHECK(token_bigrams(s).size() == (seq > 0 ? seq - 1 : 0));
  }
}

TEST_CASE("placeholders join the bigram sequence in source order") {
  TokenStream s = tokenize("soooo what");
  auto bg = token_bigrams(s);
  REQUIRE(bg.size() == 1);
  CHECK(bg[0] == std::pair<std::string, std::string>{"[char_flood]", "what"});
}

TEST_CASE("function word list versioning is content-derived") {
  FunctionWordList a({"the", "a"});
  FunctionWordList b({"a", "the"});
  FunctionWordList c({"the", "a", "of"});
  CHECK(a.version() == b.version());
  CHECK(a.version() != c.version());
}
