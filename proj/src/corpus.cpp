#include "pirate/corpus.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <set>
#include <string>

#include "pirate/errors.hpp"
#include "pirate/llm.hpp"
#include "pirate/random.hpp"

namespace pirate {
namespace {

constexpr std::array<std::string_view, 18> kOnsets{"b", "c", "d", "f", "g", "k", "l", "m", "n",
                                                   "p", "r", "s", "t", "v", "z", "br", "tr", "st"};
constexpr std::array<std::string_view, 5> kVowels{"a", "e", "i", "o", "u"};
constexpr std::array<std::string_view, 8> kCodas{"", "", "n", "r", "l", "s", "x", "m"};

const std::vector<std::string>& fillers() {
  static const std::vector<std::string> words{
      "morning", "evening", "night",    "week",     "month",    "stomach",  "chest",    "head",     "back",
      "shoulder", "knee",   "skin",     "throat",   "ear",      "eye",      "sleep",    "appetite", "weight",
      "pressure", "sugar",  "blood",    "urine",    "fluid",    "diet",     "exercise", "stress",   "work",
      "family",   "history", "mild",    "severe",   "sharp",    "dull",     "constant", "sudden",   "chronic",
      "recent",   "slight", "swelling", "redness",  "tingling", "weakness", "fatigue",  "dizziness", "nausea",
      "rest",     "water",  "tablet",   "cream",    "scan",     "sample",   "specialist", "follow",  "review",
      "routine",  "daily",  "walking",  "standing", "sitting",  "lying",    "cold",     "warm",     "heavy",
      "light",    "left",   "right",    "lower",    "upper",    "side",     "area",     "region",   "level",
      "change",   "pattern", "episode", "course",   "dose",     "therapy",  "clinic",   "visit",    "report",
      "result",   "normal", "unusual",  "likely",   "possible", "common",   "careful",  "simple",   "gentle",
      "advice",   "plan",   "signs",    "symptom",  "relief",   "comfort",  "recovery", "balance",  "hydration",
      "vitamin",  "muscle", "joint",    "nerve",    "tissue",   "gland",    "vessel",   "bone",     "lining",
  };
  return words;
}

// Terse clinical notes. Key terms carry most of each note, {A} five or six
// times and {B}, {C} three to five; {d} is a number and {f} a filler word.
const std::vector<std::string>& templates() {
  static const std::vector<std::string> t{
      "Complaint: {A} {A} for {d} days, {f} {A}, {B} {B}. Exam: {A} {C}, {B} {f}, {C} {C}. Diagnosis: {A} with "
      "{C}. Plan: {f} {f}; review {A}, {B}, {C}.",
      "Reason for visit: {B} {A} {A}. Since {d} weeks: {A} after {f}, {C} {C}. Impression: {A} from {C}; {B} "
      "{B}. Advice: {f} {f}, recheck {A} {B} {C}.",
      "Presenting issue: {A} {A}. Notes: {A} {B} over {d} days; {B} {C}; {C} {f}. Assessment: {A} versus {C}. "
      "Management: {f} {f}, monitor {B}, {A} diary.",
  };
  return t;
}

std::string make_word(Rng& rng) {
  std::string w;
  const auto syllables = 2 + rng.below(2);
  for (std::uint64_t s = 0; s < syllables; ++s) {
    w += kOnsets[rng.below(kOnsets.size())];
    w += kVowels[rng.below(kVowels.size())];
  }
  w += kCodas[rng.below(kCodas.size())];
  return w;
}

}  // namespace

std::vector<Chunk> generate_corpus(std::size_t chunks, std::uint64_t seed) {
  if (chunks == 0) throw ContractViolation("generate_corpus: chunk count must be positive");
  Rng rng(seed);

  // Key vocabulary: about 3/4 of the chunk count, at least 12 terms.
  const std::size_t key_count = std::max<std::size_t>(12, chunks * 3 / 4);
  std::set<std::string> used(fillers().begin(), fillers().end());
  const auto& stop = stopwords();
  std::vector<std::string> keys;
  while (keys.size() < key_count) {
    std::string w = make_word(rng);
    if (w.size() < 5 || stop.contains(w) || used.contains(w)) continue;
    used.insert(w);
    keys.push_back(std::move(w));
  }

  // Balanced assignment: every key fills roughly the same number of slots.
  std::vector<std::size_t> slots;
  while (slots.size() < chunks * 3) {
    std::vector<std::size_t> round(keys.size());
    for (std::size_t i = 0; i < round.size(); ++i) round[i] = i;
    for (std::size_t i = round.size(); i > 1; --i) std::swap(round[i - 1], round[rng.below(i)]);
    slots.insert(slots.end(), round.begin(), round.end());
  }

  std::vector<Chunk> out;
  out.reserve(chunks);
  std::size_t cursor = 0;
  for (std::size_t c = 0; c < chunks; ++c) {
    std::array<std::size_t, 3> pick{};
    for (auto& p : pick) {
      // Skip keys already chosen for this chunk.
      std::size_t probe = cursor;
      while (std::find(pick.begin(), &p, slots[probe % slots.size()]) != &p) ++probe;
      std::swap(slots[cursor % slots.size()], slots[probe % slots.size()]);
      p = slots[cursor % slots.size()];
      ++cursor;
    }

    std::vector<std::string> pool = fillers();
    for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng.below(i)]);
    std::size_t next_filler = 0;

    const std::string& tmpl = templates()[rng.below(templates().size())];
    std::string body;
    for (std::size_t i = 0; i < tmpl.size();) {
      if (tmpl.compare(i, 3, "{A}") == 0) {
        body += keys[pick[0]];
        i += 3;
      } else if (tmpl.compare(i, 3, "{B}") == 0) {
        body += keys[pick[1]];
        i += 3;
      } else if (tmpl.compare(i, 3, "{C}") == 0) {
        body += keys[pick[2]];
        i += 3;
      } else if (tmpl.compare(i, 3, "{d}") == 0) {
        body += std::to_string(2 + rng.below(20));
        i += 3;
      } else if (tmpl.compare(i, 3, "{f}") == 0) {
        body += pool[next_filler++ % pool.size()];
        i += 3;
      } else {
        body += tmpl[i++];
      }
    }
    char id[32];
    std::snprintf(id, sizeof id, "doc-%04zu", c + 1);
    out.push_back(make_chunk(id, std::move(body), ChunkSource::GroundTruth, 0));
  }
  return out;
}

}  // namespace pirate
