#include "raganything/text_utils.hpp"

#include <cctype>
#include <cstdio>

namespace raganything::text {

namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) != 0; }

// Decodes one UTF-8 code point starting at `i`; advances `i`. Invalid
// bytes are passed through as-is (one byte, one code point).
std::uint32_t decode_utf8(std::string_view s, std::size_t& i) {
  unsigned char c = s[i];
  if (c < 0x80) {
    ++i;
    return c;
  }
  int len = 0;
  std::uint32_t cp = 0;
  if ((c & 0xE0) == 0xC0) {
    len = 2;
    cp = c & 0x1F;
  } else if ((c & 0xF0) == 0xE0) {
    len = 3;
    cp = c & 0x0F;
  } else if ((c & 0xF8) == 0xF0) {
    len = 4;
    cp = c & 0x07;
  } else {
    ++i;
    return c;
  }
  if (i + len > s.size()) {
    ++i;
    return c;
  }
  for (int k = 1; k < len; ++k) {
    unsigned char cc = s[i + k];
    if ((cc & 0xC0) != 0x80) {
      ++i;
      return c;
    }
    cp = (cp << 6) | (cc & 0x3F);
  }
  i += len;
  return cp;
}

void encode_utf8(std::uint32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Compatibility fold for code points that show up in scraped document
// text: fullwidth ASCII, assorted Unicode spaces, common dash/quote
// variants. Everything else passes through unchanged.
std::uint32_t compat_fold(std::uint32_t cp) {
  if (cp >= 0xFF01 && cp <= 0xFF5E) return cp - 0xFF01 + 0x21;  // fullwidth
  switch (cp) {
    case 0x00A0:  // no-break space
    case 0x2000:
    case 0x2001:
    case 0x2002:
    case 0x2003:
    case 0x2004:
    case 0x2005:
    case 0x2006:
    case 0x2007:
    case 0x2008:
    case 0x2009:
    case 0x200A:
    case 0x202F:
    case 0x3000:  // ideographic space
      return ' ';
    case 0x2010:
    case 0x2011:
    case 0x2012:
    case 0x2013:
    case 0x2014:
      return '-';
    case 0x2018:
    case 0x2019:
      return '\'';
    case 0x201C:
    case 0x201D:
      return '"';
    default:
      return cp;
  }
}

bool is_ascii_punct(std::uint32_t cp) {
  return cp < 0x80 && std::ispunct(static_cast<int>(cp)) != 0;
}

}  // namespace

std::string fnv1a_hex(std::string_view data) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(data)));
  return std::string(buf);
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : s) {
    if (is_word_char(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::size_t count_tokens(std::string_view s) {
  std::size_t n = 0;
  bool in_tok = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      in_tok = false;
    } else if (!in_tok) {
      in_tok = true;
      ++n;
    }
  }
  return n;
}

std::string normalize_name(std::string_view raw) {
  // Fold and casefold code point by code point.
  std::string folded;
  folded.reserve(raw.size());
  std::size_t i = 0;
  while (i < raw.size()) {
    std::uint32_t cp = compat_fold(decode_utf8(raw, i));
    if (cp < 0x80) cp = static_cast<std::uint32_t>(
        std::tolower(static_cast<int>(cp)));
    encode_utf8(cp, folded);
  }

  // Collapse whitespace, then strip edge punctuation per word edge.
  std::vector<std::string> words;
  std::string cur;
  for (std::size_t j = 0; j < folded.size();) {
    std::size_t k = j;
    std::uint32_t cp = decode_utf8(folded, k);
    if (cp < 0x80 && std::isspace(static_cast<int>(cp))) {
      if (!cur.empty()) words.push_back(std::move(cur)), cur.clear();
    } else {
      cur.append(folded, j, k - j);
    }
    j = k;
  }
  if (!cur.empty()) words.push_back(std::move(cur));

  std::string out;
  for (auto& w : words) {
    std::size_t b = 0, e = w.size();
    while (b < e && is_ascii_punct(static_cast<unsigned char>(w[b]))) ++b;
    while (e > b && is_ascii_punct(static_cast<unsigned char>(w[e - 1]))) --e;
    if (b == e) continue;
    if (!out.empty()) out.push_back(' ');
    out.append(w, b, e - b);
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

bool is_blank(std::string_view s) {
  for (unsigned char c : s)
    if (!std::isspace(c)) return false;
  return true;
}

}  // namespace raganything::text
