#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "rsa/chunker.hpp"
#include "rsa/util.hpp"
#include "test_util.hpp"

using namespace rsa;

namespace {

std::vector<std::vector<std::string>> chunk_lemmas(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  for (const auto& c : extract_chunks(text)) out.push_back(c.lemmas);
  return out;
}

}  // namespace

TEST_CASE("tokenize detaches punctuation and keeps compounds whole") {
  CHECK(tokenize("The sUAS executes the flight plan.") ==
        std::vector<std::string>{"The", "sUAS", "executes", "the", "flight", "plan", "."});
  CHECK(tokenize("go_to_waypoint command") == std::vector<std::string>{"go_to_waypoint", "command"});
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("self-test button") == std::vector<std::string>{"self-test", "button"});
  CHECK(tokenize("(speed, altitude)") ==
        std::vector<std::string>{"(", "speed", ",", "altitude", ")"});
}

TEST_CASE("pos_tag: lexicon, then suffix rules, then default NN") {
  auto tags = [](const std::vector<std::string>& tokens) {
    std::vector<std::string> out;
    for (const auto& t : pos_tag(tokens)) out.push_back(t.tag);
    return out;
  };
  // hand-tagged oracle over the shipped lexicon
  CHECK(tags({"the", "flight", "plan"}) == std::vector<std::string>{"DT", "NN", "NN"});
  CHECK(tags({"executes"}) == std::vector<std::string>{"VBZ"});
  CHECK(tags({"quxly"}) == std::vector<std::string>{"RB"});
  CHECK(tags({"coordinates"}) == std::vector<std::string>{"NNS"});
  CHECK(tags({"the", "targeted", "GPS", "coordinates"}) ==
        std::vector<std::string>{"DT", "VBD", "NNP", "NNS"});
  CHECK(tags({"frobbing"}) == std::vector<std::string>{"VBG"});
  CHECK(tags({"qux"}) == std::vector<std::string>{"NN"});
  CHECK(tags({".", ","}) == std::vector<std::string>{"PUNCT", "PUNCT"});
  CHECK(tags({"42"}) == std::vector<std::string>{"CD"});
}

TEST_CASE("every emitted tag is inside the tagset") {
  const auto& tags = tagset();
  std::set<std::string> allowed(tags.begin(), tags.end());
  auto tagged = pos_tag(tokenize(
      "The sUAS receives a go_to_waypoint command, and it flies to the targeted GPS coordinates "
      "at the specified velocity (42 m/s)!"));
  for (const auto& t : tagged) CHECK(allowed.count(t.tag) == 1);
}

TEST_CASE("lemmatize handles plurals, inflections and the exception lexicon") {
  CHECK(lemmatize("coordinates", "NNS") == "coordinate");
  CHECK(lemmatize("flies", "VBZ") == "fly");
  CHECK(lemmatize("GPS", "NNP") == "gps");
  CHECK(lemmatize("executes", "VBZ") == "execute");
  CHECK(lemmatize("executing", "VBG") == "execute");
  CHECK(lemmatize("planning", "VBG") == "plan");
  CHECK(lemmatize("pressed", "VBD") == "press");
  CHECK(lemmatize("pressing", "VBG") == "press");
  CHECK(lemmatize("received", "VBD") == "receive");
  CHECK(lemmatize("bodies", "NNS") == "body");
  CHECK(lemmatize("buses", "NNS") == "bus");
  CHECK(lemmatize("status", "NN") == "status");
  CHECK(lemmatize("applied", "VBD") == "apply");
  CHECK(lemmatize("button", "NN") == "button");
}

TEST_CASE("extract_chunks applies the NP grammar greedily") {
  CHECK(chunk_lemmas("The sUAS executes the flight plan") ==
        std::vector<std::vector<std::string>>{{"suas"}, {"flight", "plan"}});
  CHECK(chunk_lemmas("fly") == std::vector<std::vector<std::string>>{});
  // R2 from the motivating example
  auto r2 = chunk_lemmas("The Thermostat must be self-tested at startup by pressing the self-test button.");
  bool found = false;
  for (const auto& lemmas : r2)
    if (lemmas == std::vector<std::string>{"self-test", "button"}) found = true;
  CHECK(found);
}

TEST_CASE("R1 chunks include the gps coordinate phrase") {
  auto chunks = chunk_lemmas(
      "When the sUAS receives a go_to_waypoint command, it flies to the targeted GPS coordinates "
      "at the specified velocity.");
  bool found = false;
  for (const auto& lemmas : chunks)
    if (lemmas == std::vector<std::string>{"gps", "coordinate"}) found = true;
  CHECK(found);
}

TEST_CASE("chunk spans are non-overlapping and left-to-right") {
  auto tagged = pos_tag(tokenize("The flight plan stores the route data near the ground station."));
  auto spans = chunk_spans(tagged);
  REQUIRE(!spans.empty());
  for (size_t i = 0; i < spans.size(); ++i) {
    CHECK(spans[i].begin < spans[i].end);
    if (i > 0) CHECK(spans[i].begin >= spans[i - 1].end);
  }
}

TEST_CASE("chunk lemmas always come from the source text") {
  std::string text = "The sUAS executes the flight plan at the defined speed.";
  auto tagged = pos_tag(tokenize(text));
  std::set<std::string> token_lemmas;
  for (const auto& t : tagged) token_lemmas.insert(t.lemma);
  for (const auto& chunk : extract_chunks(text))
    for (const auto& lemma : chunk.lemmas) CHECK(token_lemmas.count(lemma) == 1);
}

TEST_CASE("extract_chunks is total on arbitrary bytes") {
  std::mt19937_64 rng(1234);
  for (int round = 0; round < 200; ++round) {
    std::string junk;
    size_t len = rng() % 64;
    for (size_t i = 0; i < len; ++i) junk.push_back(static_cast<char>(rng() % 256));
    auto chunks = extract_chunks(junk);  // must not throw
    for (const auto& c : chunks) CHECK(!c.lemmas.empty());
  }
  CHECK(extract_chunks("\xC3\xA9tat syst\xC3\xA8me altitude").size() >= 1);
}

TEST_CASE("lemmatization is idempotent over fixture tokens") {
  const char* texts[] = {
      "When the sUAS receives a go_to_waypoint command, it flies to the targeted GPS coordinates.",
      "The Thermostat must be self-tested at startup by pressing the self-test button.",
      "The regulator must self-test during initialization.",
      "The alarm sounds when the isolette exceeds the maximum temperatures.",
  };
  for (const char* text : texts) {
    for (const auto& t : pos_tag(tokenize(text))) {
      auto retagged = pos_tag({t.lemma});
      REQUIRE(retagged.size() == 1);
      CHECK(lemmatize(t.lemma, retagged[0].tag) == t.lemma);
    }
  }
}

TEST_CASE("builtin lexicon is well-formed and at the expected scale") {
  const Lexicon& lex = Lexicon::builtin();
  CHECK(lex.size() >= 400);
  CHECK(lex.has("the", "DT"));
  CHECK(lex.has("execute", "VB"));
  CHECK(lex.has("must", "MD"));
}
