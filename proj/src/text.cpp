#include "pirate/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <stdexcept>

namespace pirate::text {
namespace {

icu::UnicodeString to_nfc(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  auto src = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  icu::UnicodeString out = nfc->normalize(src, status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalization failed");
  return out;
}

bool is_space(UChar32 c) { return u_isUWhiteSpace(c) || c == 0x200B; }

bool is_punct_or_symbol(UChar32 c) {
  if (u_ispunct(c)) return true;
  switch (u_charType(c)) {
    case U_MATH_SYMBOL:
    case U_CURRENCY_SYMBOL:
    case U_MODIFIER_SYMBOL:
    case U_OTHER_SYMBOL:
      return true;
    default:
      return false;
  }
}

template <typename Fn>
void for_each_codepoint(std::string_view s, Fn&& fn) {
  int32_t i = 0;
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  const auto n = static_cast<int32_t>(s.size());
  while (i < n) {
    int32_t start = i;
    UChar32 c;
    U8_NEXT(p, i, n, c);
    fn(c, s.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(i - start)));
  }
}

}  // namespace

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::string normalize(std::string_view s) {
  icu::UnicodeString u = to_nfc(s);
  u.foldCase();
  icu::UnicodeString collapsed;
  bool pending_space = false;
  for (int32_t i = 0; i < u.length();) {
    UChar32 c = u.char32At(i);
    i += U16_LENGTH(c);
    if (is_space(c)) {
      pending_space = !collapsed.isEmpty();
      continue;
    }
    if (pending_space) collapsed.append(static_cast<UChar>(' '));
    pending_space = false;
    collapsed.append(c);
  }
  std::string out;
  collapsed.toUTF8String(out);
  return out;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::string norm = normalize(s);
  std::size_t pos = 0;
  while (pos < norm.size()) {
    auto next = norm.find(' ', pos);
    if (next == std::string::npos) next = norm.size();
    if (next > pos) out.emplace_back(norm.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

std::vector<std::string> content_tokens(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& w : words(s)) {
    std::string kept;
    for_each_codepoint(w, [&](UChar32 c, std::string_view bytes) {
      if (!is_punct_or_symbol(c)) kept.append(bytes);
    });
    if (!kept.empty()) out.push_back(std::move(kept));
  }
  return out;
}

std::size_t codepoint_count(std::string_view s) {
  std::size_t n = 0;
  for_each_codepoint(s, [&](UChar32, std::string_view) { ++n; });
  return n;
}

std::vector<std::string> codepoints(std::string_view s) {
  std::vector<std::string> out;
  for_each_codepoint(s, [&](UChar32, std::string_view bytes) { out.emplace_back(bytes); });
  return out;
}

bool has_letter(std::string_view s) {
  bool found = false;
  for_each_codepoint(s, [&](UChar32 c, std::string_view) { found = found || u_isalpha(c); });
  return found;
}

std::uint64_t hash64(std::string_view s, std::uint64_t seed) {
  // FNV-1a over the bytes, then a splitmix64 finalizer keyed by the seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = h ^ (seed + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

}  // namespace pirate::text
