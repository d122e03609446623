#include "storygraph/pos_tagger.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "storygraph/error.hpp"

namespace storygraph {
namespace {

constexpr std::string_view kDeterminers =
    "a an the this that these those each every some any no all both either neither another such "
    "what which whatever whichever";
constexpr std::string_view kPronouns =
    "i me my mine myself we us our ours ourselves you your yours yourself yourselves he him his "
    "himself she her hers herself it its itself they them their theirs themselves who whom whose "
    "someone anyone everyone nobody somebody anybody everybody something anything everything "
    "nothing one ones";
constexpr std::string_view kPrepositions =
    "of in on at by for with about against between into through during before after above below "
    "to from up down out off over under again further via per within without along across "
    "behind beyond among around upon onto toward towards inside outside since until till near "
    "despite except like unlike than";
constexpr std::string_view kConjunctions =
    "and or but nor so yet because although though if unless while whereas whether as once "
    "when where whenever wherever then also";
constexpr std::string_view kParticles = "not n't 's 'll 're 've 'd 'm";
constexpr std::string_view kAdverbs =
    "very too quite rather just only even still already always never often sometimes usually "
    "here there now how why however instead maybe perhaps probably currently simply really "
    "again almost anyway back else ever far fast forward hence indeed later less more most much "
    "otherwise soon together well yes";
constexpr std::string_view kAdjectives =
    "new old good bad big small large little long short high low same different other own "
    "first last next previous current main possible available able wrong right correct empty "
    "full free open closed clear default existing missing invalid valid simple multiple single "
    "several many few certain specific general common public private local global internal "
    "external main null true false unable";
// Auxiliaries and frequent verbs, including ones whose suffix rules would
// misfire ("need" ends like nothing useful, "set" is ambiguous but mostly a
// verb in issue text).
constexpr std::string_view kVerbs =
    "be is am are was were been being have has had having do does did doing done will would "
    "shall should can could may might must get gets got getting make makes made add adds "
    "remove removes fix fixes fixed use uses create creates show shows need needs want wants "
    "allow allows see seems seem try tries work works run runs fail fails set sets update "
    "updates change changes support supports implement implements return returns throw throws "
    "call calls load loads save saves display displays open opens close closes click clicks "
    "select selects enable enables disable disables move moves check checks build builds "
    "install installs start starts stop stops find finds give gives take takes go goes went "
    "come comes keep keeps let lets put puts read reads write writes send sends know knows "
    "think thinks say says look looks appear appears occur occurs happen happens provide "
    "provides include includes contain contains require requires handle handles configure "
    "configures upgrade upgrades delete deletes edit edits import imports export exports "
    "test tests deploy deploys generate generates refactor refactors migrate migrates";

void add_words(std::unordered_map<std::string, CoarseTag>& lexicon, std::string_view words,
               CoarseTag tag) {
  std::size_t pos = 0;
  while (pos < words.size()) {
    const std::size_t end = words.find(' ', pos);
    const std::size_t stop = end == std::string_view::npos ? words.size() : end;
    if (stop > pos) lexicon.insert_or_assign(std::string(words.substr(pos, stop - pos)), tag);
    pos = stop + 1;
  }
}

bool ends_with(std::string_view word, std::string_view suffix) {
  return word.size() > suffix.size() + 1 && word.substr(word.size() - suffix.size()) == suffix;
}

CoarseTag parse_tag(std::string_view name) {
  for (auto tag : {CoarseTag::Noun, CoarseTag::Verb, CoarseTag::Adj, CoarseTag::Adv,
                   CoarseTag::Det, CoarseTag::Pron, CoarseTag::Adp, CoarseTag::Conj,
                   CoarseTag::Num, CoarseTag::Part, CoarseTag::Other}) {
    if (tag_name(tag) == name) return tag;
  }
  fail(ErrorCode::InvalidArgument, "unknown part-of-speech tag '" + std::string(name) + "'");
}

}  // namespace

std::string_view tag_name(CoarseTag tag) noexcept {
  switch (tag) {
    case CoarseTag::Noun: return "NOUN";
    case CoarseTag::Verb: return "VERB";
    case CoarseTag::Adj: return "ADJ";
    case CoarseTag::Adv: return "ADV";
    case CoarseTag::Det: return "DET";
    case CoarseTag::Pron: return "PRON";
    case CoarseTag::Adp: return "ADP";
    case CoarseTag::Conj: return "CONJ";
    case CoarseTag::Num: return "NUM";
    case CoarseTag::Part: return "PRT";
    case CoarseTag::Other: return "X";
  }
  return "X";
}

LexiconTagger::LexiconTagger() {
  add_words(lexicon_, kVerbs, CoarseTag::Verb);
  add_words(lexicon_, kAdjectives, CoarseTag::Adj);
  add_words(lexicon_, kAdverbs, CoarseTag::Adv);
  add_words(lexicon_, kParticles, CoarseTag::Part);
  add_words(lexicon_, kConjunctions, CoarseTag::Conj);
  add_words(lexicon_, kPrepositions, CoarseTag::Adp);
  add_words(lexicon_, kPronouns, CoarseTag::Pron);
  add_words(lexicon_, kDeterminers, CoarseTag::Det);
}

std::size_t LexiconTagger::load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::FileNotFound, "lexicon not found: " + path.string());
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    set(line.substr(0, tab), parse_tag(line.substr(tab + 1)));
    ++n;
  }
  return n;
}

void LexiconTagger::set(std::string word, CoarseTag tag) {
  lexicon_.insert_or_assign(std::move(word), tag);
}

CoarseTag LexiconTagger::tag_word(std::string_view word) const {
  if (auto it = lexicon_.find(std::string(word)); it != lexicon_.end()) return it->second;
  if (word.empty()) return CoarseTag::Other;

  bool has_alpha = false;
  for (char c : word) has_alpha = has_alpha || std::isalpha(static_cast<unsigned char>(c));
  if (!has_alpha) return CoarseTag::Num;

  if (ends_with(word, "ing") || ends_with(word, "ed") || ends_with(word, "ize") ||
      ends_with(word, "ise") || ends_with(word, "ify")) {
    return CoarseTag::Verb;
  }
  if (ends_with(word, "tion") || ends_with(word, "sion") || ends_with(word, "ness") ||
      ends_with(word, "ment") || ends_with(word, "ity") || ends_with(word, "ance") ||
      ends_with(word, "ence") || ends_with(word, "ship")) {
    return CoarseTag::Noun;
  }
  if (ends_with(word, "ly")) return CoarseTag::Adv;
  if (ends_with(word, "ous") || ends_with(word, "ful") || ends_with(word, "able") ||
      ends_with(word, "ible") || ends_with(word, "ive") || ends_with(word, "less") ||
      ends_with(word, "ical")) {
    return CoarseTag::Adj;
  }
  return CoarseTag::Noun;
}

std::vector<CoarseTag> LexiconTagger::tag(std::span<const std::string> tokens) const {
  std::vector<CoarseTag> tags;
  tags.reserve(tokens.size());
  for (const auto& t : tokens) tags.push_back(tag_word(t));
  return tags;
}

}  // namespace storygraph
