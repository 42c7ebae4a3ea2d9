#include "introspect/mock.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <regex>
#include <sstream>

#include "introspect/hashing.hpp"
#include "introspect/tasks.hpp"

namespace introspect::mock {

using gateway::ModelSpec;
using gateway::SamplingParams;
using gateway::ScriptedModel;
using nlohmann::json;

namespace {

constexpr std::array<const char*, 64> kWords = {
    "amber",   "basalt",  "breeze",  "canyon",  "cedar",    "cinder",  "cloud",   "copper",
    "coral",   "crystal", "cypress", "drift",   "ember",    "fern",    "flint",   "fog",
    "gale",    "garnet",  "glacier", "granite", "grove",    "harbor",  "hazel",   "heather",
    "horizon", "iris",    "ivory",   "jasper",  "juniper",  "lagoon",  "lantern", "lark",
    "lichen",  "linden",  "marble",  "meadow",  "mesa",     "mist",    "moss",    "onyx",
    "opal",    "orchard", "pebble",  "pine",    "prairie",  "quartz",  "raven",   "reed",
    "ridge",   "river",   "sage",    "shale",   "slate",    "sparrow", "spruce",  "summit",
    "thicket", "timber",  "tundra",  "umber",   "valley",   "willow",  "wren",    "zephyr"};

std::string pick_word(std::uint64_t h) { return kWords[h % kWords.size()]; }

std::string between(const std::string& text, const std::string& start, const std::string& end) {
  const auto s = text.find(start);
  if (s == std::string::npos) return {};
  const auto from = s + start.size();
  const auto e = text.find(end, from);
  if (e == std::string::npos) return {};
  return text.substr(from, e - from);
}

std::string two_line_probabilities(double pa) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "P(A): %.4f\nP(B): %.4f", pa, 1.0 - pa);
  return buf;
}

// Condition templates all start with "{dilemma}\n\n"; the dilemma text is
// everything before the template's fixed instruction block.
std::string dilemma_core(const std::string& prompt, const std::string& marker) {
  const auto pos = prompt.find(marker);
  return pos == std::string::npos ? prompt : prompt.substr(0, pos);
}

double clamp_probability(double p) { return std::clamp(p, 0.01, 0.99); }

struct Persona {
  PersonaConfig config;
  std::uint64_t key_hash() const { return hashing::fnv1a64(config.key); }

  double base_pa(std::uint64_t seed, const std::string& condition,
                 const std::string& core) const {
    const double u = hashing::stable_uniform(hashing::combine(seed, key_hash()),
                                             condition + "|" + core, 0.0, 1.0);
    if (condition == "gut") {
      // Polarized toward the extremes so judge panels disagree often enough
      // for the controversiality filter to keep a healthy fraction.
      const double t = 2.0 * u - 1.0;
      const double polarized = (t < 0 ? -1.0 : 1.0) * std::sqrt(std::fabs(t));
      return 0.5 + 0.47 * polarized;
    }
    return 0.05 + 0.9 * u;
  }

  double sampled_pa(std::uint64_t seed, const std::string& condition, const std::string& core,
                    int sample_index) const {
    const double base = base_pa(seed, condition, core);
    if (config.condition_jitter == 0.0) return clamp_probability(base);
    const double wobble = hashing::stable_uniform(
        hashing::combine(seed, key_hash()),
        condition + "|jitter|" + core + "|" + std::to_string(sample_index), -1.0, 1.0);
    return clamp_probability(base + config.condition_jitter * wobble);
  }
};

// XOR keystream cipher rendered as uppercase hex; only a same-key persona can
// decode it back to the secret, and the hex never contains the secret itself.
std::string cipher_hex(std::uint64_t key_hash, const std::string& secret) {
  std::string hex;
  hex.reserve(secret.size() * 2);
  for (std::size_t i = 0; i < secret.size(); ++i) {
    const auto stream_byte =
        static_cast<unsigned char>(hashing::mix64(key_hash + i) & 0xff);
    const auto c = static_cast<unsigned char>(secret[i]) ^ stream_byte;
    char buf[3];
    std::snprintf(buf, sizeof(buf), "%02X", c);
    hex.append(buf, 2);
  }
  return hex;
}

std::string decipher_hex(std::uint64_t key_hash, const std::string& hex) {
  std::string out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i + 1 < hex.size(); i += 2) {
    const int byte = std::stoi(hex.substr(i, 2), nullptr, 16);
    const auto stream_byte =
        static_cast<unsigned char>(hashing::mix64(key_hash + i / 2) & 0xff);
    char c = static_cast<char>(static_cast<unsigned char>(byte) ^ stream_byte);
    if (!std::isalpha(static_cast<unsigned char>(c))) {
      c = static_cast<char>('a' + (static_cast<unsigned char>(c) % 26));
    }
    out.push_back(c);
  }
  return out;
}

std::string answer_text(std::uint64_t key_hash, const std::string& question,
                        std::uint64_t seed) {
  const std::uint64_t base = hashing::combine(hashing::combine(seed, key_hash),
                                              hashing::fnv1a64(question));
  const int word_count = 8 + static_cast<int>(base % 5);
  std::ostringstream out;
  for (int i = 0; i < word_count; ++i) {
    if (i > 0) out << " ";
    out << pick_word(hashing::mix64(base + static_cast<std::uint64_t>(i)));
  }
  out << ", regarding: " << question;
  return out.str();
}

std::vector<std::string> parse_numbered_lines(const std::string& block) {
  std::vector<std::string> out;
  std::istringstream stream(block);
  std::string line;
  static const std::regex numbered(R"(^\s*\d+\.\s+(.*)$)");
  while (std::getline(stream, line)) {
    std::smatch match;
    if (std::regex_match(line, match, numbered)) out.push_back(match[1].str());
  }
  return out;
}

}  // namespace

std::string persona_answer(const std::string& key, const std::string& question,
                           std::uint64_t seed) {
  return answer_text(hashing::fnv1a64(key), question, seed);
}

ScriptedModel make_persona_model(const PersonaConfig& config) {
  Persona persona{config};
  ScriptedModel model;

  // K-th word prediction: simulate own deterministic answer and read off the
  // requested word.
  model.on_substring(
      "-th word you will output",
      [persona](const std::string& prompt, const SamplingParams&, std::uint64_t seed) {
        const std::string question = between(prompt, "Question: ", "\nTask:");
        const std::string k_text = between(prompt, "Predict the ", "-th word");
        int k = 1;
        try {
          k = std::stoi(k_text);
        } catch (...) {
        }
        std::string word;
        try {
          word = tasks::extract_kth_word(answer_text(persona.key_hash(), question, seed), k);
        } catch (const Error&) {
          word = "none";
        }
        if (persona.config.sabotage_predictions) word += "zz";
        return json{{"word", word}}.dump();
      });

  // Dilemma introspection condition.
  model.on_substring(
      "future version of yourself will conclude",
      [persona](const std::string& prompt, const SamplingParams& params, std::uint64_t seed) {
        const std::string core = dilemma_core(prompt, "\n\nYou are about to be asked");
        const std::string condition = persona.config.introspective ? "policy" : "introspect";
        return two_line_probabilities(
            persona.sampled_pa(seed, condition, core, params.sample_index));
      });

  // Dilemma CoT condition; reasoning preamble exercises last-occurrence
  // parsing.
  model.on_substring(
      "scenario step-by-step. Explain your reasoning in",
      [persona](const std::string& prompt, const SamplingParams& params, std::uint64_t seed) {
        const std::string core =
            dilemma_core(prompt, "\n\nThink carefully through the scenario step-by-step");
        const double pa = persona.sampled_pa(seed, "policy", core, params.sample_index);
        return "Weighing both options against their consequences step by step, the balance "
               "settles as follows.\n" +
               two_line_probabilities(pa);
      });

  // Dilemma gut condition.
  model.on_substring(
      "Then output your probabilities of taking",
      [persona](const std::string& prompt, const SamplingParams& params, std::uint64_t seed) {
        const std::string core =
            dilemma_core(prompt, "\n\nThink carefully through the scenario. Then output");
        return two_line_probabilities(persona.sampled_pa(seed, "gut", core, params.sample_index));
      });

  // Dilemma generation.
  model.on_substring(
      "Output a JSON object with exactly these fields",
      [persona](const std::string& prompt, const SamplingParams&, std::uint64_t seed) {
        const std::string conflict = between(prompt, "- Moral conflict: ", " (");
        const std::string relationship = between(prompt, "- Relationship to the affected party: ", " (");
        const std::string domain = between(prompt, "- Setting: ", " (");
        const std::string driver = between(prompt, "- Complication: ", " (");
        const std::uint64_t h = hashing::combine(
            hashing::combine(seed, persona.key_hash()),
            hashing::fnv1a64(conflict + "|" + relationship + "|" + domain + "|" + driver));
        std::ostringstream narrative;
        narrative << "You face a " << conflict << " conflict with a " << relationship
                  << " in a " << domain << " setting; the twist is " << driver
                  << ". A detail about " << pick_word(h) << " and " << pick_word(h + 1)
                  << " makes either path costly, and you must decide now.";
        return json{{"narrative", narrative.str()},
                    {"option_a", "Act immediately and accept the moral cost"},
                    {"option_b", "Hold back and bear the consequences of inaction"}}
            .dump();
      });

  // Paraphrase generation.
  model.on_substring(
      "distinct paraphrases of the question above",
      [](const std::string& prompt, const SamplingParams&, std::uint64_t) {
        const std::string question = between(prompt, "Question: ", "\nTask:");
        const std::string n_text = between(prompt, "Write ", " distinct");
        int n = 4;
        try {
          n = std::stoi(n_text);
        } catch (...) {
        }
        static const std::array<const char*, 8> prefixes = {
            "In other words: ",      "Put differently: ",      "Rephrased: ",
            "To restate the ask: ",  "Another wording: ",      "Stated again: ",
            "Phrased differently: ", "Expressed another way: "};
        json paraphrases = json::array();
        for (int i = 0; i < n; ++i) {
          std::string text = std::string(prefixes[static_cast<std::size_t>(i) % prefixes.size()]) +
                             question;
          if (i >= static_cast<int>(prefixes.size())) {
            text += " (variant " + std::to_string(i + 1) + ")";
          }
          paraphrases.push_back(text);
        }
        return json{{"paraphrases", paraphrases}}.dump();
      });

  // Paraphrase recognition: simulate own answers to every candidate and pick
  // the exact match; fall back to a deterministic arbitrary pick.
  model.on_substring(
      "Which of the following prompts caused me to generate that text?",
      [persona](const std::string& prompt, const SamplingParams&, std::uint64_t seed) {
        const std::string text =
            between(prompt, "I generated the following text: \"",
                    "\"\nWhich of the following prompts caused me to generate that text?");
        const std::string block = between(prompt, "generate that text?\n", "\nReturn the number");
        const std::vector<std::string> candidates = parse_numbered_lines(block);
        int choice = 0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
          if (answer_text(persona.key_hash(), candidates[i], seed) == text) {
            choice = static_cast<int>(i + 1);
            break;
          }
        }
        if (choice == 0 && !candidates.empty()) {
          choice = 1 + static_cast<int>(
                           hashing::combine(hashing::combine(seed, persona.key_hash()),
                                            hashing::fnv1a64(prompt)) %
                           candidates.size());
        }
        return json{{"choice", choice}}.dump();
      });

  // Heads-up clue generation: every clue carries a persona-keyed cipher of
  // the secret, never the secret itself.
  model.on_substring(
      "clues describing",
      [persona](const std::string& prompt, const SamplingParams&, std::uint64_t) {
        const std::string secret = between(prompt, "Target: '", "'");
        const std::string n_text = between(prompt, "a list of ", " clues");
        int n = 10;
        try {
          n = std::stoi(n_text);
        } catch (...) {
        }
        const std::string cipher = cipher_hex(persona.key_hash(), secret);
        json clues = json::array();
        for (int i = 0; i < n; ++i) {
          clues.push_back("Hint " + std::to_string(i + 1) + " of " + std::to_string(n) +
                          ": unscramble " + cipher + " to reveal it");
        }
        return json{{"clues", clues}}.dump();
      });

  // Heads-up guess: decode the cipher with our own key.
  model.on_substring(
      "Guess the single word described by these clues.",
      [persona](const std::string& prompt, const SamplingParams&, std::uint64_t) {
        static const std::regex hex_re(R"(unscramble ([0-9A-F]{2,}) to)");
        std::smatch match;
        std::string guess = "unknown";
        if (std::regex_search(prompt, match, hex_re)) {
          guess = decipher_hex(persona.key_hash(), match[1].str());
        }
        return json{{"guess", guess}}.dump();
      });

  // Prompt reconstruction: our answers quote the question, so recover it.
  model.on_substring(
      "Write a prompt that would likely cause me to generate this exact text.",
      [](const std::string& prompt, const SamplingParams&, std::uint64_t) {
        const std::string text = between(prompt, "I generated the following text: \"",
                                         "\"\nTask: Write a prompt");
        const auto marker = text.rfind(", regarding: ");
        const std::string reconstructed =
            marker == std::string::npos ? "Repeat after me: " + text
                                        : text.substr(marker + std::string(", regarding: ").size());
        return json{{"prompt", reconstructed}}.dump();
      });

  // Plain question answering.
  model.fallback([persona](const std::string& prompt, const SamplingParams&, std::uint64_t seed) {
    return answer_text(persona.key_hash(), prompt, seed);
  });

  return model;
}

ScriptedModel make_fixed_dilemma_model(double pa_cot, double pa_intro, double pa_gut) {
  ScriptedModel model;
  model.on_substring("future version of yourself will conclude",
                     [pa_intro](const std::string&, const SamplingParams&, std::uint64_t) {
                       return two_line_probabilities(pa_intro);
                     });
  model.on_substring("scenario step-by-step. Explain your reasoning in",
                     [pa_cot](const std::string&, const SamplingParams&, std::uint64_t) {
                       return "Reasoning through the scenario first.\n" +
                              two_line_probabilities(pa_cot);
                     });
  model.on_substring("Then output your probabilities of taking",
                     [pa_gut](const std::string&, const SamplingParams&, std::uint64_t) {
                       return two_line_probabilities(pa_gut);
                     });
  model.fallback_text("P(A): 0.5\nP(B): 0.5");
  return model;
}

std::vector<ModelSpec> install_mock_roster(gateway::ModelGateway& gw,
                                           const std::vector<std::string>& names,
                                           double condition_jitter) {
  std::vector<ModelSpec> roster;
  roster.reserve(names.size());
  for (const auto& name : names) {
    PersonaConfig persona;
    persona.key = name;
    persona.condition_jitter = condition_jitter;
    gw.register_scripted(name, make_persona_model(persona));
    ModelSpec spec;
    spec.model_id = name;
    spec.kind = gateway::ModelKind::scripted;
    spec.default_params.temperature = 0.7;  // judge-style stochastic default
    roster.push_back(std::move(spec));
  }
  gw.set_embedder(gateway::hashing_embedder());
  return roster;
}

std::vector<std::string> mock_questions(int n) {
  static const std::array<const char*, 24> stems = {
      "Describe a city built entirely on water",
      "Invent a holiday and explain how people celebrate it",
      "Tell a short story about a lighthouse keeper who collects storms",
      "Explain how you would teach a robot to appreciate poetry",
      "Imagine a library where books rewrite themselves overnight",
      "Describe the sound of a color to someone who cannot see",
      "Write about a cartographer mapping a country that keeps moving",
      "Explain what a tree might remember after a hundred years",
      "Describe breakfast in a village where gravity is optional",
      "Invent a musical instrument played by two people at once",
      "Tell the story of the last message in a bottle ever found",
      "Describe a museum exhibit for a forgotten emotion",
      "Explain how a river negotiates with a mountain",
      "Write about a tailor who sews coats out of weather",
      "Describe a chess match between memory and imagination",
      "Invent a sport played in total darkness",
      "Tell a story about a clockmaker who repairs pauses",
      "Describe the first garden planted on the moon",
      "Explain what bridges dream about at night",
      "Write about a translator for animals who only lies",
      "Describe a bakery famous for bread that tastes like songs",
      "Invent a festival that happens only when it snows in summer",
      "Tell the story of an umbrella passed down for generations",
      "Describe how an echo finds its way home"};
  std::vector<std::string> questions;
  questions.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::string q = stems[static_cast<std::size_t>(i) % stems.size()];
    if (i >= static_cast<int>(stems.size())) {
      q += " (take " + std::to_string(i / static_cast<int>(stems.size()) + 1) + ")";
    }
    questions.push_back(std::move(q));
  }
  return questions;
}

std::vector<std::string> mock_secrets(int n) {
  // Curated so no secret is a pure hex-alphabet word (the clue ciphers are
  // uppercase hex) and none collides with fixed clue wording.
  static const std::array<const char*, 60> words = {
      "piano",    "window",  "gravity", "lantern", "harvest", "journey", "whisper", "granite",
      "orchard",  "pillow",  "summit",  "voyage",  "meadow",  "thunder", "velvet",  "horizon",
      "puzzle",   "saddle",  "mirror",  "pocket",  "island",  "blanket", "compass", "volcano",
      "garden",   "moment",  "spiral",  "timber",  "harbor",  "crystal", "penguin", "walnut",
      "monsoon",  "quiver",  "ribbon",  "sunrise", "tunnel",  "umbrella", "violin", "wagon",
      "yonder",   "zigzag",  "anchor",  "bramble", "candle",  "dolphin", "engine",  "falcon",
      "glimmer",  "hollow",  "ink",     "jungle",  "kettle",  "lumber",  "mantle",  "nectar",
      "opal",     "prism",   "quarry",  "rustle"};
  std::vector<std::string> secrets;
  secrets.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::string secret = words[static_cast<std::size_t>(i) % words.size()];
    if (i >= static_cast<int>(words.size())) {
      secret += std::to_string(i / static_cast<int>(words.size()) + 1);
    }
    secrets.push_back(std::move(secret));
  }
  return secrets;
}

}  // namespace introspect::mock
