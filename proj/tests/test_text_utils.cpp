#include <doctest.h>

#include "raganything/text_utils.hpp"

using namespace raganything::text;

TEST_CASE("fnv1a matches reference vectors") {
  // Published FNV-1a 64-bit test vectors.
  CHECK(fnv1a("") == 14695981039346656037ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("fnv1a_hex is 16 lowercase hex digits") {
  std::string h = fnv1a_hex("foobar");
  CHECK(h == "85944171f73967e8");
  CHECK(fnv1a_hex("").size() == 16);
}

TEST_CASE("tokenize lowercases and splits on non-alphanumerics") {
  CHECK(tokenize("Hello, World!") == std::vector<std::string>{"hello", "world"});
  CHECK(tokenize("a-b_c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(tokenize("GPT4 2020") == std::vector<std::string>{"gpt4", "2020"});
  CHECK(tokenize("   ") == std::vector<std::string>{});
}

TEST_CASE("count_tokens uses the whitespace rule") {
  CHECK(count_tokens("") == 0);
  CHECK(count_tokens("one") == 1);
  CHECK(count_tokens("one two\tthree\nfour") == 4);
  CHECK(count_tokens("  padded   words  ") == 2);
  // Punctuation glued to a word is part of the same whitespace token.
  CHECK(count_tokens("hello, world!") == 2);
}

TEST_CASE("normalize_name casefolds and strips edge punctuation") {
  CHECK(normalize_name("t-SNE Plot") == normalize_name("t-sne plot"));
  CHECK(normalize_name("  Tesla,  Inc. ") == "tesla inc");
  CHECK(normalize_name("\"Style Space\"") == "style space");
  CHECK(normalize_name("GCAN") == "gcan");
  CHECK(normalize_name("a   b") == "a b");
  CHECK(normalize_name("") == "");
}

TEST_CASE("normalize_name folds fullwidth and exotic space variants") {
  // Fullwidth "ＡＢＣ" folds to "abc"; no-break space collapses like a space.
  CHECK(normalize_name("ＡＢＣ") == "abc");
  CHECK(normalize_name("a b") == "a b");
  CHECK(normalize_name("x—y") == normalize_name("x-y"));
}

TEST_CASE("normalize_name is idempotent") {
  for (std::string s : {"t-SNE Plot", "  \"A  B\" ", "ＧＣＡＮ", "Ｔｅｓｌａ Inc.",
                        "-- weird -- edges --", "MiXeD CaSe 123"}) {
    std::string once = normalize_name(s);
    CHECK(normalize_name(once) == once);
  }
}

TEST_CASE("join and is_blank") {
  CHECK(join({"a", "b", "c"}, " | ") == "a | b | c");
  CHECK(join({}, ",") == "");
  CHECK(is_blank("  \t\n"));
  CHECK_FALSE(is_blank(" x "));
}
