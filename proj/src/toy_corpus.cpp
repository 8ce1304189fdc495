#include "morphoqg/toy_corpus.hpp"

#include <array>
#include <random>
#include <string>

namespace morphoqg {

namespace {

struct Verb {
  const char *base, *past, *third, *participle;
};
struct Noun {
  const char *singular, *plural;
};
struct Adjective {
  const char *base, *comparative;
};

constexpr std::array kPeople = {"Alice", "Bob", "Carol", "David", "Emma", "Frank", "Grace", "Henry"};
constexpr std::array kPlaces = {"Paris", "London", "Tokyo", "Berlin", "Rome", "Cairo"};
constexpr std::array kVerbs = {
    Verb{"paint", "painted", "paints", "painted"}, Verb{"visit", "visited", "visits", "visited"},
    Verb{"build", "built", "builds", "built"},     Verb{"write", "wrote", "writes", "written"},
    Verb{"buy", "bought", "buys", "bought"},       Verb{"find", "found", "finds", "found"},
    Verb{"carry", "carried", "carries", "carried"}, Verb{"plan", "planned", "plans", "planned"},
    Verb{"sell", "sold", "sells", "sold"},         Verb{"open", "opened", "opens", "opened"},
};
constexpr std::array kNouns = {
    Noun{"book", "books"},   Noun{"car", "cars"},         Noun{"house", "houses"},
    Noun{"box", "boxes"},    Noun{"letter", "letters"},   Noun{"bridge", "bridges"},
    Noun{"toy", "toys"},     Noun{"picture", "pictures"},
};
constexpr std::array kAdjectives = {
    Adjective{"tall", "taller"}, Adjective{"big", "bigger"}, Adjective{"happy", "happier"},
    Adjective{"old", "older"},   Adjective{"good", "better"}, Adjective{"fast", "faster"},
};

class Builder {
 public:
  Builder& add(std::string word, std::string pos, std::string ner = "O", bool answer = false) {
    AnswerBio bio = AnswerBio::O;
    if (answer) bio = in_answer_ ? AnswerBio::I : AnswerBio::B;
    in_answer_ = answer;
    tokens_.push_back({std::move(word), std::move(pos), std::move(ner), bio});
    return *this;
  }
  std::vector<TaggedToken> take() { return std::move(tokens_); }

 private:
  std::vector<TaggedToken> tokens_;
  bool in_answer_ = false;
};

template <typename A, typename Rng>
const auto& pick(const A& arr, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, arr.size() - 1);
  return arr[d(rng)];
}

}  // namespace

std::vector<RawExample> toy_corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> year_dist(1990, 2015);
  std::vector<RawExample> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::string person = pick(kPeople, rng);
    std::string other = pick(kPeople, rng);
    while (other == person) other = pick(kPeople, rng);
    const Verb& v = pick(kVerbs, rng);
    const Noun& obj = pick(kNouns, rng);
    const Adjective& adj = pick(kAdjectives, rng);
    const std::string place = pick(kPlaces, rng);
    const std::string year = std::to_string(year_dist(rng));

    Builder src, q;
    switch (k % 6) {
      case 0:  // answer: year
        src.add(person, "NNP", "PERSON").add(v.past, "VBD").add("the", "DT").add(obj.singular, "NN")
            .add("in", "IN").add(year, "CD", "DATE", true).add(".", ".");
        q.add("when", "WRB").add("did", "VBD").add(person, "NNP").add(v.base, "VB")
            .add("the", "DT").add(obj.singular, "NN").add("?", ".");
        break;
      case 1:  // answer: subject
        src.add(person, "NNP", "PERSON", true).add(v.past, "VBD").add("the", "DT")
            .add(obj.singular, "NN").add("in", "IN").add(year, "CD", "DATE").add(".", ".");
        q.add("who", "WP").add(v.past, "VBD").add("the", "DT").add(obj.singular, "NN").add("?", ".");
        break;
      case 2:  // answer: object
        src.add(person, "NNP", "PERSON").add(v.past, "VBD").add("the", "DT", "O", true)
            .add(obj.singular, "NN", "O", true).add("in", "IN").add(year, "CD", "DATE").add(".", ".");
        q.add("what", "WP").add("did", "VBD").add(person, "NNP").add(v.base, "VB").add("?", ".");
        break;
      case 3:  // answer: place
        src.add(person, "NNP", "PERSON").add(v.third, "VBZ").add(obj.plural, "NNS").add("in", "IN")
            .add(place, "NNP", "LOCATION", true).add(".", ".");
        q.add("where", "WRB").add("does", "VBZ").add(person, "NNP").add(v.base, "VB")
            .add(obj.plural, "NNS").add("?", ".");
        break;
      case 4:  // passive, answer: agent
        src.add("the", "DT").add(obj.singular, "NN").add("was", "VBD").add(v.participle, "VBN")
            .add("by", "IN").add(person, "NNP", "PERSON", true).add("in", "IN")
            .add(year, "CD", "DATE").add(".", ".");
        q.add("who", "WP").add(v.past, "VBD").add("the", "DT").add(obj.singular, "NN").add("?", ".");
        break;
      default:  // comparison, answer: subject
        src.add(person, "NNP", "PERSON", true).add("is", "VBZ").add(adj.comparative, "JJR")
            .add("than", "IN").add(other, "NNP", "PERSON").add(".", ".");
        q.add("who", "WP").add("is", "VBZ").add(adj.comparative, "JJR").add("than", "IN")
            .add(other, "NNP").add("?", ".");
        break;
    }
    out.push_back({src.take(), q.take()});
  }
  return out;
}

}  // namespace morphoqg
