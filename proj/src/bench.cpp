#include "triform/bench.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "triform/error.hpp"
#include "triform/rng.hpp"

namespace triform::bench {
namespace {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Lexicons. Chinese entries are pinyin transliterations; rendered Chinese
// stimuli carry a "[zh]" tag.

struct PropPair {
  std::string key;
  std::string sym_a, sym_b;
  std::string code_a, code_b;
  std::string en_a, en_b, en_not_a, en_not_b;
  std::string fr_a, fr_b, fr_not_a, fr_not_b;
  std::string zh_a, zh_b, zh_not_a, zh_not_b;
};

const std::vector<PropPair>& prop_pairs() {
  static const std::vector<PropPair> k = {
      {"rain", "P", "Q", "rains", "ground_wet", "it rains", "the ground is wet", "it does not rain",
       "the ground is not wet", "il pleut", "le sol est mouillé", "il ne pleut pas",
       "le sol n'est pas mouillé", "xia yu", "dimian shi le", "bu xia yu", "dimian bu shi"},
      {"alarm", "A", "B", "alarm_rings", "students_leave", "the alarm rings", "the students leave",
       "the alarm does not ring", "the students do not leave", "l'alarme sonne",
       "les élèves partent", "l'alarme ne sonne pas", "les élèves ne partent pas",
       "lingsheng xiang", "xuesheng likai", "lingsheng bu xiang", "xuesheng bu likai"},
      {"switch", "R", "S", "switch_on", "room_bright", "the switch is on", "the room is bright",
       "the switch is not on", "the room is not bright", "l'interrupteur est allumé",
       "la pièce est éclairée", "l'interrupteur n'est pas allumé", "la pièce n'est pas éclairée",
       "kaiguan kai zhe", "fangjian hen liang", "kaiguan mei kai", "fangjian bu liang"},
      {"kettle", "M", "N", "water_boils", "kettle_whistles", "the water boils",
       "the kettle whistles", "the water does not boil", "the kettle does not whistle",
       "l'eau bout", "la bouilloire siffle", "l'eau ne bout pas", "la bouilloire ne siffle pas",
       "shui feiteng", "shuihu xiang", "shui bu feiteng", "shuihu bu xiang"},
      {"store", "U", "V", "store_open", "door_unlocked", "the store is open",
       "the door is unlocked", "the store is not open", "the door is not unlocked",
       "le magasin est ouvert", "la porte est déverrouillée", "le magasin n'est pas ouvert",
       "la porte n'est pas déverrouillée", "shangdian kai men", "men mei suo",
       "shangdian bu kai men", "men suo zhe"},
      {"sun", "H", "W", "sun_shines", "air_warm", "the sun shines", "the air is warm",
       "the sun does not shine", "the air is not warm", "le soleil brille", "l'air est chaud",
       "le soleil ne brille pas", "l'air n'est pas chaud", "taiyang zhao", "kongqi nuanhuo",
       "taiyang bu zhao", "kongqi bu nuanhuo"},
  };
  return k;
}

struct Term {
  std::string en, fr;
  bool fr_feminine;
  std::string zh, code, sym;
};

struct TermChain {
  std::string key;
  Term small, middle, big;
};

const std::vector<TermChain>& term_chains() {
  static const std::vector<TermChain> k = {
      {"dogs",
       {"dogs", "chiens", false, "gou", "dogs", "D"},
       {"mammals", "mammifères", false, "buru dongwu", "mammals", "M"},
       {"animals", "animaux", false, "dongwu", "animals", "A"}},
      {"roses",
       {"roses", "roses", true, "meigui", "roses", "R"},
       {"flowers", "fleurs", true, "hua", "flowers", "F"},
       {"plants", "plantes", true, "zhiwu", "plants", "P"}},
      {"squares",
       {"squares", "carrés", false, "zhengfangxing", "squares", "S"},
       {"rectangles", "rectangles", false, "changfangxing", "rectangles", "R"},
       {"polygons", "polygones", false, "duobianxing", "polygons", "P"}},
      {"sparrows",
       {"sparrows", "moineaux", false, "maque", "sparrows", "S"},
       {"birds", "oiseaux", false, "niao", "birds", "B"},
       {"vertebrates", "vertébrés", false, "jizhui dongwu", "vertebrates", "V"}},
      {"oaks",
       {"oaks", "chênes", false, "xiangshu", "oaks", "O"},
       {"trees", "arbres", false, "shu", "trees", "T"},
       {"plants", "plantes", true, "zhiwu", "plants", "P"}},
      {"violins",
       {"violins", "violons", false, "xiaotiqin", "violins", "V"},
       {"string instruments", "instruments à cordes", false, "xianyueqi", "string_instruments", "S"},
       {"instruments", "instruments", false, "yueqi", "instruments", "I"}},
  };
  return k;
}

struct Person {
  std::string name;
  bool feminine;
};

const std::vector<Person>& people() {
  static const std::vector<Person> k = {
      {"Alice", true}, {"Bob", false},   {"Carol", true}, {"David", false},
      {"Emma", true},  {"Frank", false}, {"Grace", true}, {"Henry", false},
      {"Irene", true}, {"Jack", false},  {"Laura", true}, {"Kevin", false},
  };
  return k;
}

const Person& person(const std::string& name) {
  for (const auto& p : people())
    if (p.name == name) return p;
  throw InvalidArgument("unknown entity '" + name + "'");
}

struct Attribute {
  std::string key;
  std::string en_cmp, en_sup;    // "taller", "tallest"
  std::string fr_m, fr_f;        // "grand", "grande"
  std::string zh_cmp, zh_sup;    // "gao", "zui gao"
  std::string code_dict, sym;    // "heights", "h"
};

const std::vector<Attribute>& attributes() {
  static const std::vector<Attribute> k = {
      {"height", "taller", "tallest", "grand", "grande", "gao", "zui gao", "heights", "h"},
      {"age", "older", "oldest", "âgé", "âgée", "nianling da", "nianling zui da", "ages", "a"},
      {"speed", "faster", "fastest", "rapide", "rapide", "kuai", "zui kuai", "speeds", "v"},
  };
  return k;
}

struct Event {
  std::string en, fr, zh, code, sym;
};

struct EventTriple {
  std::string key;
  Event a, b, c;
};

// Causal chains a -> b -> c.
const std::vector<EventTriple>& causal_chains() {
  static const std::vector<EventTriple> k = {
      {"rain",
       {"rain", "la pluie", "xiayu", "rain", "R"},
       {"flooding", "l'inondation", "hongshui", "flooding", "F"},
       {"road closure", "la fermeture de la route", "fenglu", "road_closure", "C"}},
      {"smoking",
       {"smoking", "le tabagisme", "xiyan", "smoking", "S"},
       {"lung damage", "les lésions pulmonaires", "feibu sunshang", "lung_damage", "L"},
       {"breathlessness", "l'essoufflement", "huxi kunnan", "breathlessness", "B"}},
      {"drought",
       {"drought", "la sécheresse", "ganhan", "drought", "D"},
       {"crop failure", "les mauvaises récoltes", "jianshou", "crop_failure", "H"},
       {"food shortage", "la pénurie alimentaire", "liangshi duanque", "food_shortage", "F"}},
      {"deforestation",
       {"deforestation", "la déforestation", "kanfa senlin", "deforestation", "D"},
       {"soil erosion", "l'érosion des sols", "shuitu liushi", "soil_erosion", "E"},
       {"river silting", "l'envasement des rivières", "heliu yuji", "river_silting", "S"}},
      {"outage",
       {"a power outage", "la panne de courant", "tingdian", "power_outage", "P"},
       {"a server crash", "le plantage du serveur", "fuwuqi bengkui", "server_crash", "S"},
       {"data loss", "la perte de données", "shuju diushi", "data_loss", "D"}},
  };
  return k;
}

// Confounding triples: a is the common cause of b and c.
const std::vector<EventTriple>& confounders() {
  static const std::vector<EventTriple> k = {
      {"heat",
       {"hot weather", "la chaleur", "yanre tianqi", "hot_weather", "H"},
       {"ice cream sales", "les ventes de glaces", "bingqilin xiaoliang", "ice_cream_sales", "I"},
       {"sunburns", "les coups de soleil", "shaishang", "sunburns", "S"}},
      {"age",
       {"age", "l'âge", "nianling", "age", "A"},
       {"reading skill", "la capacité de lecture", "yuedu nengli", "reading_skill", "R"},
       {"shoe size", "la pointure", "xiema", "shoe_size", "Z"}},
      {"winter",
       {"winter", "l'hiver", "dongji", "winter", "W"},
       {"flu cases", "les cas de grippe", "liugan bingli", "flu_cases", "F"},
       {"heating bills", "les factures de chauffage", "nuanqi fei", "heating_bills", "B"}},
      {"city",
       {"city size", "la taille de la ville", "chengshi guimo", "city_size", "N"},
       {"the number of churches", "le nombre d'églises", "jiaotang shuliang", "churches", "C"},
       {"the number of crimes", "le nombre de crimes", "fanzui shuliang", "crimes", "K"}},
      {"tourism",
       {"the tourist season", "la saison touristique", "lvyou wangji", "tourist_season", "T"},
       {"hotel bookings", "les réservations d'hôtel", "jiudian yuding", "hotel_bookings", "B"},
       {"traffic jams", "les embouteillages", "jiaotong yongdu", "traffic_jams", "J"}},
  };
  return k;
}

struct Container {
  std::string en, fr, zh, code, sym;
};

struct ContainerChain {
  std::string key;
  Container item, mid, outer;
};

const std::vector<ContainerChain>& container_chains() {
  static const std::vector<ContainerChain> k = {
      {"coin",
       {"the coin", "la pièce", "yingbi", "coin", "c"},
       {"the purse", "le porte-monnaie", "qianbao", "purse", "p"},
       {"the bag", "le sac", "beibao", "bag", "b"}},
      {"ring",
       {"the ring", "la bague", "jiezhi", "ring", "r"},
       {"the box", "la boîte", "hezi", "box", "x"},
       {"the drawer", "le tiroir", "chouti", "drawer", "d"}},
      {"letter",
       {"the letter", "la lettre", "xin", "letter", "l"},
       {"the envelope", "l'enveloppe", "xinfeng", "envelope", "e"},
       {"the folder", "le dossier", "wenjianjia", "folder", "f"}},
      {"key",
       {"the key", "la clé", "yaoshi", "key", "k"},
       {"the pocket", "la poche", "koudai", "pocket", "p"},
       {"the jacket", "la veste", "jiake", "jacket", "j"}},
      {"marble",
       {"the marble", "la bille", "danzhu", "marble", "m"},
       {"the cup", "la tasse", "beizi", "cup", "u"},
       {"the cupboard", "le placard", "guizi", "cupboard", "w"}},
  };
  return k;
}

template <class T>
const T& by_key(const std::vector<T>& table, const std::string& key) {
  for (const auto& e : table)
    if (e.key == key) return e;
  throw InvalidArgument("unknown lexicon key '" + key + "'");
}

template <class T>
const std::string& pick_key(const std::vector<T>& table, KeyedRng& rng) {
  return table[rng.below(table.size())].key;
}

// ---------------------------------------------------------------------------
// Text helpers.

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

// "Si" + clause with elision before "il".
std::string fr_si(const std::string& clause) {
  if (clause.rfind("il ", 0) == 0) return "S'" + clause;
  return "Si " + clause;
}

std::string fr_que(const std::string& clause) {
  if (clause.rfind("il ", 0) == 0) return "qu'" + clause;
  return "que " + clause;
}

// Contracts "de" with a following definite article.
std::string fr_de(const std::string& np) {
  if (np.rfind("le ", 0) == 0) return "du " + np.substr(3);
  if (np.rfind("les ", 0) == 0) return "des " + np.substr(4);
  return "de " + np;
}

std::string set_text(const std::vector<std::int64_t>& v, bool compact) {
  std::string s = "{";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += compact ? "," : ", ";
    s += std::to_string(v[i]);
  }
  return s + "}";
}

std::vector<std::int64_t> parse_set(const std::string& s) {
  std::vector<std::int64_t> v;
  std::istringstream in(s);
  std::int64_t x;
  while (in >> x) v.push_back(x);
  return v;
}

std::string encode_set(const std::vector<std::int64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(v[i]);
  }
  return s;
}

std::vector<std::int64_t> sample_set(KeyedRng& rng, int size, int max_value) {
  std::vector<std::int64_t> pool(static_cast<std::size_t>(max_value));
  std::iota(pool.begin(), pool.end(), 1);
  rng.shuffle(pool.begin(), pool.end());
  pool.resize(static_cast<std::size_t>(size));
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::int64_t uniform_int(KeyedRng& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

std::string hundredths(std::int64_t v) { return fmt::format("{}.{:02d}", v / 100, v % 100); }
std::string tenths(std::int64_t v) { return fmt::format("{}.{}", v / 10, v % 10); }

std::string point_text(std::int64_t x, std::int64_t y, bool compact) {
  return compact ? fmt::format("({},{})", x, y) : fmt::format("({}, {})", x, y);
}

std::vector<std::string> distinct_people(KeyedRng& rng, int n) {
  std::vector<std::string> names;
  for (const auto& p : people()) names.push_back(p.name);
  rng.shuffle(names.begin(), names.end());
  names.resize(static_cast<std::size_t>(n));
  return names;
}

// ---------------------------------------------------------------------------
// Concept implementations.

using Params = std::vector<Param>;
using Inst = CanonicalInstance;

struct ConceptImpl {
  std::function<Params(KeyedRng&)> sample;
  std::function<std::string(const Inst&)> solve;
  std::function<std::string(const Inst&, Form)> render;
  std::function<std::string(const Inst&, Form)> surface;
};

Param ip(std::string name, std::int64_t v) { return {std::move(name), v}; }
Param sp(std::string name, std::string v) { return {std::move(name), std::move(v)}; }

[[noreturn]] void bad_form(Form f) {
  throw InvalidArgument("unknown form enum value " + std::to_string(static_cast<int>(f)));
}

// 1. Multi-step evaluation: (a + b) * c - d / e.
ConceptImpl multi_step() {
  ConceptImpl c;
  c.sample = [](KeyedRng& r) {
    const auto e = uniform_int(r, 2, 5);
    return Params{ip("a", uniform_int(r, 2, 9)), ip("b", uniform_int(r, 2, 9)),
                  ip("c", uniform_int(r, 2, 6)), ip("d", e * uniform_int(r, 1, 6)), ip("e", e)};
  };
  c.solve = [](const Inst& i) {
    return std::to_string((i.integer("a") + i.integer("b")) * i.integer("c") -
                          i.integer("d") / i.integer("e"));
  };
  c.render = [s = c.solve](const Inst& i, Form f) -> std::string {
    const auto a = i.integer("a"), b = i.integer("b"), cc = i.integer("c"), d = i.integer("d"),
               e = i.integer("e");
    const auto sum = a + b, prod = sum * cc, quot = d / e;
    const auto r = s(i);
    const auto expr = fmt::format("({} + {}) × {} − {} / {}", a, b, cc, d, e);
    switch (f) {
      case Form::en:
        return fmt::format("Calculate {}. First {} + {} = {}, then {} × {} = {}, and {} / {} = {}. "
                           "Therefore the result is {}.",
                           expr, a, b, sum, sum, cc, prod, d, e, quot, r);
      case Form::fr:
        return fmt::format("Calculer {}. D'abord {} + {} = {}, puis {} × {} = {}, et {} / {} = {}. "
                           "Donc le résultat est {}.",
                           expr, a, b, sum, sum, cc, prod, d, e, quot, r);
      case Form::zh:
        return fmt::format("[zh] Jisuan {}. Xian {} + {} = {}, ranhou {} × {} = {}, {} / {} = {}. "
                           "Suoyi jieguo shi {}.",
                           expr, a, b, sum, sum, cc, prod, d, e, quot, r);
      case Form::code:
        return fmt::format("def evaluate():\n    s = {} + {}\n    p = s * {}\n    q = {} // {}\n"
                           "    return p - q  # {}",
                           a, b, cc, d, e, r);
      case Form::math:
        return fmt::format("{} = {} × {} − {} = {}", expr, sum, cc, quot, r);
      case Form::structured:
        return fmt::format("S1: {}+{}={} | S2: {}*{}={} | S3: {}/{}={} | S4: {}-{}={} | "
                           "Conclusion: {}",
                           a, b, sum, sum, cc, prod, d, e, quot, prod, quot, r, r);
    }
    bad_form(f);
  };
  c.surface = [](const Inst& i, Form f) -> std::string {
    const auto& r = i.conclusion;
    switch (f) {
      case Form::en: return "the result is " + r;
      case Form::fr: return "le résultat est " + r;
      case Form::zh: return "jieguo shi " + r;
      case Form::code: return "# " + r;
      case Form::math: return "= " + r;
      case Form::structured: return "Conclusion: " + r;
    }
    bad_form(f);
  };
  return c;
}

// 2. Modular arithmetic: a mod m.
ConceptImpl modular() {
  ConceptImpl c;
  c.sample = [](KeyedRng& r) {
    return Params{ip("a", uniform_int(r, 20, 99)), ip("m", uniform_int(r, 3, 12))};
  };
  c.solve = [](const Inst& i) { return std::to_string(i.integer("a") % i.integer("m")); };
  c.render = [](const Inst& i, Form f) -> std::string {
    const auto a = i.integer("a"), m = i.integer("m"), q = a / m;
    const auto& r = i.conclusion;
    switch (f) {
      case Form::en:
        return fmt::format("What is {} mod {}? {} = {} × {} + {}, so the remainder is {}. "
                           "Therefore {} mod {} = {}.",
                           a, m, a, q, m, r, r, a, m, r);
      case Form::fr:
        return fmt::format("Combien vaut {} mod {} ? {} = {} × {} + {}, le reste est {}. "
                           "Donc {} mod {} = {}.",
                           a, m, a, q, m, r, r, a, m, r);
      case Form::zh:
        return fmt::format("[zh] {} mod {} shi duoshao? {} = {} × {} + {}, yushu shi {}. "
                           "Suoyi {} mod {} = {}.",
                           a, m, a, q, m, r, r, a, m, r);
      case Form::code:
        return fmt::format("def remainder(a={}, m={}):\n    return a % m  # {}", a, m, r);
      case Form::math:
        return fmt::format("{} = {} × {} + {} ⊢ {} ≡ {} (mod {})", a, q, m, r, a, r, m);
      case Form::structured:
        return fmt::format("P1: a={} | P2: m={} | S1: {}={}*{}+{} | Rule: Division | Conclusion: {}",
                           a, m, a, q, m, r, r);
    }
    bad_form(f);
  };
  c.surface = [](const Inst& i, Form f) -> std::string {
    const auto a = i.integer("a"), m = i.integer("m");
    const auto& r = i.conclusion;
    switch (f) {
      case Form::en:
      case Form::fr:
      case Form::zh: return fmt::format("{} mod {} = {}", a, m, r);
      case Form::code: return "# " + r;
      case Form::math: return fmt::format("≡ {} (mod {})", r, m);
      case Form::structured: return "Conclusion: " + r;
    }
    bad_form(f);
  };
  return c;
}

// 3. Proportional reasoning: n1 items cost n1*u; price of n2 items.
ConceptImpl proportional() {
  ConceptImpl c;
  c.sample = [](KeyedRng& r) {
    return Params{ip("count", uniform_int(r, 2, 6)), ip("unit", uniform_int(r, 2, 9)),
                  ip("target", uniform_int(r, 7, 15))};
  };
  c.solve = [](const Inst& i) { return std::to_string(i.integer("target") * i.integer("unit")); };
  c.render = [](const Inst& i, Form f) -> std::string {
    const auto n = i.integer("count"), u = i.integer("unit"), t = i.integer("target");
    const auto total = n * u;
    const auto& r = i.conclusion;
    switch (f) {
      case Form::en:
        return fmt::format("{} items cost ${}. Each item costs ${}. Therefore {} items cost ${}.", n,
                           total, u, t, r);
      case Form::fr:
        return fmt::format("{} articles coûtent {} $. Chaque article coûte {} $. "
                           "Donc {} articles coûtent {} $.",
                           n, total, u, t, r);
      case Form::zh:
        return fmt::format("[zh] {} jian shangpin jiage {} meiyuan. Mei jian {} meiyuan. "
                           "Suoyi {} jian jiage {} meiyuan.",
                           n, total, u, t, r);
      case Form::code:
        return fmt::format("def cost(n={}, count={}, total={}):\n    return total // count * n  # {}",
                           t, n, total, r);
      case Form::math:
        return fmt::format("{} / {} = x / {} ⊢ x = {}", total, n, t, r);
      case Form::structured:
        return fmt::format("P1: {} items = ${} | P2: unit = ${} | P3: target = {} items | "
                           "Rule: Proportion | Conclusion: {}",
                           n, total, u, t, r);
    }
    bad_form(f);
  };
  c.surface = [](const Inst& i, Form f) -> std::string {
    const auto t = i.integer("target");
    const auto& r = i.conclusion;
    switch (f) {
      case Form::en: return fmt::format("{} items cost ${}", t, r);
      case Form::fr: return fmt::format("{} articles coûtent {} $", t, r);
      case Form::zh: return fmt::format("{} jian jiage {} meiyuan", t, r);
      case Form::code: return "# " + r;
      case Form::math: return "x = " + r;
      case Form::structured: return "Conclusion: " + r;
    }
    bad_form(f);
  };
  return c;
}

struct EuclidStep {
  std::int64_t a, q, b, r;
};

std::vector<EuclidStep> euclid(std::int64_t a, std::int64_t b) {
  std::vector<EuclidStep> steps;
  while (b != 0) {
    steps.push_back({a, a / b, b, a % b});
    const auto r = a % b;
    a = b;
    b = r;
  }
  return steps;
}

// 4. GCD via the Euclidean algorithm.
ConceptImpl gcd_concept() {
  ConceptImpl c;
  c.sample = [](KeyedRng& r) {
    const auto g = uniform_int(r, 2, 12);
    std::int64_t m, n;
    do {
      m = uniform_int(r, 3, 9);
      n = uniform_int(r, 2, m - 1);
    } while (std::gcd(m, n) != 1);
    return Params{ip("a", g * m), ip("b", g * n)};
  };
  c.solve = [](const Inst& i) {
    auto a = i.integer("a"), b = i.integer("b");
    while (b) {
      const auto t = a % b;
      a = b;
      b = t;
    }
    return std::to_string(a);
  };
  c.render = [](const Inst& i, Form f) -> std::string {
    const auto a = i.integer("a"), b = i.integer("b");
    const auto& g = i.conclusion;
    const auto steps = euclid(a, b);
    std::vector<std::string> prose, chain, slots;
    chain.push_back(fmt::format("gcd({}, {})", a, b));
    for (const auto& s : steps) {
      prose.push_back(fmt::format("{} = {} × {} + {}", s.a, s.q, s.b, s.r));
      chain.push_back(fmt::format("gcd({}, {})", s.b, s.r));
      slots.push_back(fmt::format("S{}: {}={}*{}+{}", slots.size() + 1, s.a, s.q, s.b, s.r));
    }
    switch (f) {
      case Form::en:
        return fmt::format("Find gcd({}, {}). {}. Therefore gcd({}, {}) = {}.", a, b,
                           fmt::join(prose, "; "), a, b, g);
      case Form::fr:
        return fmt::format("Trouver pgcd({}, {}). {}. Donc pgcd({}, {}) = {}.", a, b,
                           fmt::join(prose, " ; "), a, b, g);
      case Form::zh:
        return fmt::format("[zh] Qiu gcd({}, {}). {}. Suoyi gcd({}, {}) = {}.", a, b,
                           fmt::join(prose, "; "), a, b, g);
      case Form::code:
        return fmt::format("def gcd(a={}, b={}):\n    while b:\n        a, b = b, a % b\n"
                           "    return a  # {}",
                           a, b, g);
      case Form::math:
        return fmt::format("{} = {}", fmt::join(chain, " = "), g);
      case Form::structured:
        return fmt::format("{} | Rule: Euclid | Conclusion: {}", fmt::join(slots, " | "), g);
    }
    bad_form(f);
  };
  c.surface = [](const Inst& i, Form f) -> std::string {
    const auto a = i.integer("a"), b = i.integer("b");
    const auto& g = i.conclusion;
    switch (f) {
      case Form::en:
      case Form::zh: return fmt::format("gcd({}, {}) = {}", a, b, g);
      case Form::fr: return fmt::format("pgcd({}, {}) = {}", a, b, g);
      case Form::code: return "# " + g;
      case Form::math: return "= " + g;
      case Form::structured: return "Conclusion: " + g;
    }
    bad_form(f);
  };
  return c;
}

// 5. Categorical syllogism (Barbara): all M are A; all D are M; so all D are A.
std::string fr_all(const Term& t, bool sentence_start) {
  const std::string q = t.fr_feminine ? "toutes les " : "tous les ";
  return (sentence_start ? capitalize(q) : q) + t.fr;
}

ConceptImpl syllogism() {
  ConceptImpl c;
  c.sample = [](KeyedRng& r) { return Params{sp("terms", pick_key(term_chains(), r))}; };
  c.solve = [](const Inst& i) {
    const auto& t = by_key(term_chains(), i.text("terms"));
    return t.small.code + "⊆" + t.big.code;
  };
  c.render = [](const Inst& i, Form f) -> std::string {
    const auto& t = by_key(term_chains(), i.text("terms"));
    const auto &d = t.small, &m = t.middle, &a = t.big;
    switch (f) {
      case Form::en:
        return fmt::format("All {} are {}. All {} are {}. Therefore all {} are {}.", m.en, a.en,
                           d.en, m.en, d.en, a.en);
      case Form::fr:
        return fmt::format("{} sont des {}. {} sont des {}. Donc {} sont des {}.", fr_all(m, true),
                           a.fr, fr_all(d, true), m.fr, fr_all(d, false), a.fr);
      case Form::zh:
        return fmt::format("[zh] Suoyou {} dou shi {}. Suoyou {} dou shi {}. "
                           "Suoyi suoyou {} dou shi {}.",
                           m.zh, a.zh, d.zh, m.zh, d.zh, a.zh);
      case Form::code:
        return fmt::format("def syllogism({}: set, {}: set, {}: set) -> bool:\n"
                           "    assert {} <= {} and {} <= {}\n    return {} <= {}",
                           d.code, m.code, a.code, m.code, a.code, d.code, m.code, d.code, a.code);
      case Form::math:
        return fmt::format("{} ⊆ {}, {} ⊆ {} ⊢ {} ⊆ {}", m.sym, a.sym, d.sym, m.sym, d.sym, a.sym);
      case Form::structured:
        return fmt::format("P1: All {} are {} | P2: All {} are {} | Rule: Barbara | "
                           "Conclusion: All {} are {}",
                           m.sym, a.sym, d.sym, m.sym, d.sym, a.sym);
    }
    bad_form(f);
  };
  c.surface = [](const Inst& i, Form f) -> std::string {
    const auto& t = by_key(term_chains(), i.text("terms"));
    const auto &d = t.small, &a = t.big;
    switch (f) {
      case Form::en: return fmt::format("all {} are {}", d.en, a.en);
      case Form::fr: return fmt::format("{} sont des {}", fr_all(d, false), a.fr);
      case Form::zh: return fmt::format("suoyou {} dou shi {}", d.zh, a.zh);
      case Form::code: return fmt::format("return {} <= {}", d.code, a.code);
      case Form::math: return fmt::format("⊢ {} ⊆ {}", d.sym, a.sym);
      case Form::structured: return fmt::format("Conclusion: All {} are {}", d.sym, a.sym);
    }
    bad_form(f);
  };
  return c;
}

Params sample_pair(KeyedRng& r) { return Params{sp("pair", pick_key(prop_pairs(), r))}; }

// 6. Modus ponens.
ConceptImpl modus_ponens() {
  ConceptImpl c;
  c.sample = sample_pair;
  c.solve = [](const Inst& i) { return by_key(prop_pairs(), i.text("pair")).sym_b; };
  c.render = [](const Inst& i, Form f) -> std::string {
    const auto& p = by_key(prop_pairs(), i.text("pair"));
    switch (f) {
      case Form::en:
        return fmt::format("If {} then {}. {}. Therefore {}.", p.en_a, p.en_b, capitalize(p.en_a),
                           p.en_b);
      case Form::fr:
        return fmt::format("{} alors {}. {}. Donc {}.", fr_si(p.fr_a), p.fr_b, capitalize(p.fr_a),
                           p.fr_b);
      case Form::zh:
        return fmt::format("[zh] Ruguo {} name {}. {}. Suoyi {}.", p.zh_a, p.zh_b,
                           capitalize(p.zh_a), p.zh_b);
      case Form::code:
        return fmt::format("def modus_ponens({}, {}): return {} if {} else None", p.code_a,
                           p.code_b, p.code_b, p.code_a);
      case Form::math:
        return fmt::format("{} → {}, {} ⊢ {}", p.sym_a, p.sym_b, p.sym_a, p.sym_b);
      case Form::structured:
        return fmt::format("P1: {}->{} | P2: {} | Rule: MP | Conclusion: {}", p.sym_a, p.sym_b,
                           p.sym_a, p.sym_b);
    }
    bad_form(f);
  };
  c.surface = [](const Inst& i, Form f) -> std::string {
    const auto& p = by_key(prop_pairs(), i.text("pair"));
    switch (f) {
      case Form::en: return "Therefore " + p.en_b;
      case Form::fr: return "Donc " + p.fr_b;
      case Form::zh: return "Suoyi " + p.zh_b;
      case Form::code: return fmt::format("return {} if {}", p.code_b, p.code_a);
      case Form::math: return "⊢ " + p.sym_b;
      case Form::structured: return "Conclusion: " + p.sym_b;
    }
    bad_form(f);
  };
  return c;
}

// 7. Contrapositive (modus tollens).
ConceptImpl contrapositive() {
  ConceptImpl c;
  c.sample = sample_pair;
  c.solve = [](const Inst& i) { return "¬" + by_key(prop_pairs(), i.text("pair")).sym_a; };
  c.render = [](const Inst& i, Form f) -> std::string {
    const auto& p = by_key(prop_pairs(), i.text("pair"));
    switch (f) {
      case Form::en:
        return fmt::format("If {} then {}. {}. Therefore {}.", p.en_a, p.en_b,
                           capitalize(p.en_not_b), p.en_not_a);
      case Form::fr:
        return fmt::format("{} alors {}. {}. Donc {}.", fr_si(p.fr_a), p.fr_b,
                           capitalize(p.fr_not_b), p.fr_not_a);
      case Form::zh:
        return fmt::format("[zh] Ruguo {} name {}. {}. Suoyi {}.", p.zh_a, p.zh_b,
                           capitalize(p.zh_not_b), p.zh_not_a);
      case Form::code:
        return fmt::format("def contrapositive({}, {}): return (not {}) if not {} else None",
                           p.code_a, p.code_b, p.code_a, p.code_b);
      case Form::math:
        return fmt::format("{} → {}, ¬{} ⊢ ¬{}", p.sym_a, p.sym_b, p.sym_b, p.sym_a);
      case Form::structured:
        return fmt::format("P1: {}->{} | P2: not {} | Rule: MT | Conclusion: not {}", p.sym_a,
                           p.sym_b, p.sym_b, p.sym_a);
    }
    bad_form(f);
  };
  c.surface = [](const Inst& i, Form f) -> std::string {
    const auto& p = by_key(prop_pairs(), i.text("pair"));
    switch (f) {
      case Form::en: return "Therefore " + p.en_not_a;
      case Form::fr: return "Donc " + p.fr_not_a;
      case Form::zh: return "Suoyi " + p.zh_not_a;
      case Form::code: return fmt::format("return (not {})", p.code_a);
      case Form::math: return "⊢ ¬" + p.sym_a;
      case Form::structured: return "Conclusion: not " + p.sym_a;
    }
    bad_form(f);
  };
  return c;
}

// 8. De Morgan's law: not (A and B) gives (not A) or (not B).
ConceptImpl de_morgan() {
  ConceptImpl c;
  c.sample = sample_pair;
  c.solve = [](const Inst& i) {
    const auto& p = by_key(prop_pairs(), i.text("pair"));
    return "¬" + p.sym_a + "∨¬" + p.sym_b;
  };
  c.render = [](const Inst& i, Form f) -> std::string {
    const auto& p = by_key(prop_pairs(), i.text("pair"));
    switch (f) {
      case Form::en:
        return fmt::format("It is not the case that both {} and {}. Therefore {} or {}.", p.en_a,
                           p.en_b, p.en_not_a, p.en_not_b);
      case Form::fr:
        return fmt::format("Il est faux {} et {}. Donc {} ou {}.", fr_que(p.fr_a), fr_que(p.fr_b),
                           p.fr_not_a, p.fr_not_b);
      case Form::zh:
        return fmt::format("[zh] Bing fei {} qie {}. Suoyi {} huozhe {}.", p.zh_a, p.zh_b,
                           p.zh_not_a, p.zh_not_b);
      case Form::code:
        return fmt::format("def de_morgan({}, {}): return (not {}) or (not {})  # == not ({} and {})",
                           p.code_a, p.code_b, p.code_a, p.code_b, p.code_a, p.code_b);
      case Form::math:
        return fmt::format("¬({} ∧ {}) ⊢ ¬{} ∨ ¬{}", p.sym_a, p.sym_b, p.sym_a, p.sym_b);
      case Form::structured:
        return fmt::format("P1: not ({} and {}) | Rule: De Morgan | Conclusion: (not {}) or (not {})",
                           p.sym_a, p.sym_b, p.sym_a, p.sym_b);
    }
    bad_form(f);
  };
  c.surface = [](const Inst& i, Form f) -> std::string {
    const auto& p = by_key(prop_pairs(), i.text("pair"));
    switch (f) {
      case Form::en: return fmt::format("{} or {}", p.en_not_a, p.en_not_b);
      case Form::fr: return fmt::format("{} ou {}", p.fr_not_a, p.fr_not_b);
      case Form::zh: return fmt::format("{} huozhe {}", p.zh_not_a, p.zh_not_b);
      case Form::code: return fmt::format("(not {}) or (not {})", p.code_a, p.code_b);
      case Form::math: return fmt::format("⊢ ¬{} ∨ ¬{}", p.sym_a, p.sym_b);
      case Form::structured: return fmt::format("Conclusion: (not {}) or (not {})", p.sym_a, p.sym_b);
    }
    bad_form(f);
  };
  return c;
}

// 9. Transitive ordering: x > y, y > z; x is the greatest.
std::string fr_adj(const Attribute& at, const std::string& name) {
  return person(name).feminine ? at.fr_f : at.fr_m;
}

ConceptImpl transitive() {
  ConceptImpl c;
  c.sample = [](KeyedRng& r) {
    const auto names = distinct_people(r, 3);
    return Params{sp("x", names[0]), sp("y", names[1]), sp("z", names[2]),
                  sp("attribute", pick_key(attributes(), r))};
  };
  c.solve = [](const Inst& i) { return i.text("x"); };
  c.render = [](const Inst& i, Form f) -> std::string {
    const auto& at = by_key(attributes(), i.text("attribute"));
    const auto &x = i.text("x"), &y = i.text("y"), &z = i.text("z");
    switch (f) {
      case Form::en:
        return fmt::format("{} is {} than {}. {} is {} than {}. Therefore {} is the {}.", x,
                           at.en_cmp, y, y, at.en_cmp, z, x, at.en_sup);
      case Form::fr:
        return fmt::format("{} est plus {} que {}. {} est plus {} que {}. Donc {} est {} plus {}.",
                           x, fr_adj(at, x), y, y, fr_adj(at, y), z, x,
                           person(x).feminine ? "la" : "le", fr_adj(at, x));
      case Form::zh:
        return fmt::format("[zh] {} bi {} {}. {} bi {} {}. Suoyi {} {}.", x, y, at.zh_cmp, y, z,
                           at.zh_cmp, x, at.zh_sup);
      case Form::code:
        return fmt::format("def greatest({0}):\n    assert {0}['{1}'] > {0}['{2}'] > {0}['{3}']\n"
                           "    return max({0}, key={0}.get)  # '{1}'",
                           at.code_dict, x, y, z);
      case Form::math:
        return fmt::format("{0}({1}) > {0}({2}), {0}({2}) > {0}({3}) ⊢ argmax {0} = {1}", at.sym, x,
                           y, z);
      case Form::structured:
        return fmt::format("P1: {} > {} | P2: {} > {} | Rule: Transitivity | Conclusion: {}", x, y,
                           y, z, x);
    }
    bad_form(f);
  };
  c.surface = [](const Inst& i, Form f) -> std::string {
    const auto& at = by_key(attributes(), i.text("attribute"));
    const auto& x = i.conclusion;
    switch (f) {
      case Form::en: return fmt::format("{} is the {}", x, at.en_sup);
      case Form::fr:
        return fmt::format("{} est {} plus {}", x, person(x).feminine ? "la" : "le", fr_adj(at, x));
      case Form::zh: return fmt::format("{} {}", x, at.zh_sup);
      case Form::code: return fmt::format("# '{}'", x);
      case Form::math: return "= " + x;
      case Form::structured: return "Conclusion: " + x;
    }
    bad_form(f);
  };
  return c;
}

// 10/11. Set intersection and difference.
Params sample_sets(KeyedRng& r, bool difference) {
  std::vector<std::int64_t> a, b, out;
  for (;;) {
    a = sample_set(r, 4, 12);
    b = sample_set(r, 4, 12);
    out.clear();
    if (difference)
      std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    else
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    if (!out.empty() && a != b) break;
  }
  return Params{sp("A", encode_set(a)), sp("B", encode_set(b))};
}

std::vector<std::int64_t> set_result(const Inst& i, bool difference) {
  const auto a = parse_set(i.text("A")), b = parse_set(i.text("B"));
  std::vector<std::int64_t> out;
  if (difference)
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  else
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

ConceptImpl set_operation(bool difference) {
  ConceptImpl c;
  c.sample = [difference](KeyedRng& r) { return sample_sets(r, difference); };
  c.solve = [difference](const Inst& i) { return set_text(set_result(i, difference), false); };
  c.render = [difference](const Inst& i, Form f) -> std::string {
    const auto a = parse_set(i.text("A")), b = parse_set(i.text("B"));
    const auto res = set_result(i, difference);
    const auto as = set_text(a, false), bs = set_text(b, false), rs = set_text(res, false);
    switch (f) {
      case Form::en:
        return fmt::format("Set A is {} and set B is {}. Therefore {} is {}.", as, bs,
                           difference ? "A minus B" : "the intersection of A and B", rs);
      case Form::fr:
        return fmt::format("L'ensemble A est {} et l'ensemble B est {}. Donc {} est {}.", as, bs,
                           difference ? "A privé de B" : "l'intersection de A et B", rs);
      case Form::zh:
        return fmt::format("[zh] Jihe A shi {}, jihe B shi {}. Suoyi {} shi {}.", as, bs,
                           difference ? "A jian B de chaji" : "A he B de jiaoji", rs);
      case Form::code:
        return fmt::format("def {}():\n    a = {}\n    b = {}\n    return a {} b  # {}",
                           difference ? "difference" : "intersection", as, bs,
                           difference ? "-" : "&", rs);
      case Form::math:
        return fmt::format("A = {}, B = {} ⊢ A {} B = {}", as, bs, difference ? "∖" : "∩", rs);
      case Form::structured:
        return fmt::format("P1: A={} | P2: B={} | Rule: {} | Conclusion: {}", set_text(a, true),
                           set_text(b, true), difference ? "Difference" : "Intersection",
                           set_text(res, true));
    }
    bad_form(f);
  };
  c.surface = [difference](const Inst& i, Form f) -> std::string {
    const auto res = set_result(i, difference);
    const auto rs = set_text(res, false);
    switch (f) {
      case Form::en:
      case Form::fr:
      case Form::zh: return rs;
      case Form::code: return "# " + rs;
      case Form::math: return fmt::format("A {} B = {}", difference ? "∖" : "∩", rs);
      case Form::structured: return "Conclusion: " + set_text(res, true);
    }
    bad_form(f);
  };
  return c;
}

// 12. Function composition: f(x) = a x + b, g(x) = c x + d, evaluate f(g(x0)).
ConceptImpl composition() {
  ConceptImpl c;
  c.sample = [](KeyedRng& r) {
    return Params{ip("fa", uniform_int(r, 2, 5)), ip("fb", uniform_int(r, 1, 9)),
                  ip("ga", uniform_int(r, 2, 5)), ip("gb", uniform_int(r, 1, 9)),
                  ip("x", uniform_int(r, 1, 6))};
  };
  c.solve = [](const Inst& i) {
    const auto g = i.integer("ga") * i.integer("x") + i.integer("gb");
    return std::to_string(i.integer("fa") * g + i.integer("fb"));
  };
  c.render = [](const Inst& i, Form f) -> std::string {
    const auto fa = i.integer("fa"), fb = i.integer("fb"), ga = i.integer("ga"),
               gb = i.integer("gb"), x = i.integer("x");
    const auto g = ga * x + gb;
    const auto& r = i.conclusion;
    switch (f) {
      case Form::en:
        return fmt::format("Let f(x) = {}x + {} and g(x) = {}x + {}. Then g({}) = {} and f({}) = {}. "
                           "Therefore f(g({})) = {}.",
                           fa, fb, ga, gb, x, g, g, r, x, r);
      case Form::fr:
        return fmt::format("Soit f(x) = {}x + {} et g(x) = {}x + {}. Alors g({}) = {} et f({}) = {}. "
                           "Donc f(g({})) = {}.",
                           fa, fb, ga, gb, x, g, g, r, x, r);
      case Form::zh:
        return fmt::format("[zh] She f(x) = {}x + {}, g(x) = {}x + {}. Name g({}) = {}, f({}) = {}. "
                           "Suoyi f(g({})) = {}.",
                           fa, fb, ga, gb, x, g, g, r, x, r);
      case Form::code:
        return fmt::format("def compose(x={}):\n    f = lambda t: {} * t + {}\n"
                           "    g = lambda t: {} * t + {}\n    return f(g(x))  # {}",
                           x, fa, fb, ga, gb, r);
      case Form::math:
        return fmt::format("f(x) = {}x + {}, g(x) = {}x + {} ⊢ (f ∘ g)({}) = f({}) = {}", fa, fb, ga,
                           gb, x, g, r);
      case Form::structured:
        return fmt::format("P1: f(x)={}x+{} | P2: g(x)={}x+{} | S1: g({})={} | Rule: Composition | "
                           "Conclusion: f(g({}))={}",
                           fa, fb, ga, gb, x, g, x, r);
    }
    bad_form(f);
  };
  c.surface = [](const Inst& i, Form f) -> std::string {
    const auto x = i.integer("x");
    const auto& r = i.conclusion;
    switch (f) {
      case Form::en:
      case Form::fr:
      case Form::zh: return fmt::format("f(g({})) = {}", x, r);
      case Form::code: return "# " + r;
      case Form::math: return "= " + r;
      case Form::structured: return fmt::format("Conclusion: f(g({}))={}", x, r);
    }
    bad_form(f);
  };
  return c;
}

// 13. Causal chain a -> b -> c.
ConceptImpl causal_chain() {
  ConceptImpl c;
  c.sample = [](KeyedRng& r) { return Params{sp("chain", pick_key(causal_chains(), r))}; };
  c.solve = [](const Inst& i) {
    const auto& t = by_key(causal_chains(), i.text("chain"));
    return t.a.code + "->" + t.c.code;
  };
  c.render = [](const Inst& i, Form f) -> std::string {
    const auto& t = by_key(causal_chains(), i.text("chain"));
    const auto &a = t.a, &b = t.b, &cc = t.c;
    switch (f) {
      case Form::en:
        return fmt::format("{} causes {}. {} causes {}. Therefore {} causes {}.", capitalize(a.en),
                           b.en, capitalize(b.en), cc.en, a.en, cc.en);
      case Form::fr:
        return fmt::format("{} cause {}. {} cause {}. Donc {} cause {}.", capitalize(a.fr), b.fr,
                           capitalize(b.fr), cc.fr, a.fr, cc.fr);
      case Form::zh:
        return fmt::format("[zh] {} daozhi {}. {} daozhi {}. Suoyi {} daozhi {}.", capitalize(a.zh),
                           b.zh, capitalize(b.zh), cc.zh, a.zh, cc.zh);
      case Form::code:
        return fmt::format("def causes(a, c, edges={{('{0}', '{1}'), ('{1}', '{2}')}}):\n"
                           "    return any((a, b) in edges and (b, c) in edges for (_, b) in edges)"
                           "  # causes('{0}', '{2}') == True",
                           a.code, b.code, cc.code);
      case Form::math:
        return fmt::format("{} → {}, {} → {} ⊢ {} ⇝ {}", a.sym, b.sym, b.sym, cc.sym, a.sym, cc.sym);
      case Form::structured:
        return fmt::format("P1: {} -> {} | P2: {} -> {} | Rule: Chain | Conclusion: {} -> {}",
                           a.code, b.code, b.code, cc.code, a.code, cc.code);
    }
    bad_form(f);
  };
  c.surface = [](const Inst& i, Form f) -> std::string {
    const auto& t = by_key(causal_chains(), i.text("chain"));
    switch (f) {
      case Form::en: return fmt::format("Therefore {} causes {}", t.a.en, t.c.en);
      case Form::fr: return fmt::format("Donc {} cause {}", t.a.fr, t.c.fr);
      case Form::zh: return fmt::format("Suoyi {} daozhi {}", t.a.zh, t.c.zh);
      case Form::code: return fmt::format("causes('{}', '{}') == True", t.a.code, t.c.code);
      case Form::math: return fmt::format("⊢ {} ⇝ {}", t.a.sym, t.c.sym);
      case Form::structured: return fmt::format("Conclusion: {} -> {}", t.a.code, t.c.code);
    }
    bad_form(f);
  };
  return c;
}

// 14. Confounding: a <- c -> b, so a does not cause b.
ConceptImpl confounding() {
  ConceptImpl c;
  c.sample = [](KeyedRng& r) { return Params{sp("triple", pick_key(confounders(), r))}; };
  c.solve = [](const Inst& i) {
    const auto& t = by_key(confounders(), i.text("triple"));
    return t.b.code + "-/->" + t.c.code;
  };
  c.render = [](const Inst& i, Form f) -> std::string {
    const auto& t = by_key(confounders(), i.text("triple"));
    const auto &z = t.a, &a = t.b, &b = t.c;
    switch (f) {
      case Form::en:
        return fmt::format("{0} affects {1}. {0} affects {2}. {3} and {2} are correlated. "
                           "Therefore there is no causal effect of {1} on {2}; {4} is a common cause.",
                           capitalize(z.en), a.en, b.en, capitalize(a.en), z.en);
      case Form::fr:
        return fmt::format("{0} influence {1}. {0} influence {2}. {3} et {2} sont corrélés. "
                           "Donc il n'y a pas d'effet causal {4} sur {2} ; {5} est une cause commune.",
                           capitalize(z.fr), a.fr, b.fr, capitalize(a.fr), fr_de(a.fr), z.fr);
      case Form::zh:
        return fmt::format("[zh] {0} yingxiang {1}. {0} yingxiang {2}. {1} he {2} xiangguan. "
                           "Suoyi {1} dui {2} meiyou yinguo xiaoying; {3} shi gongtong yuanyin.",
                           capitalize(z.zh), a.zh, b.zh, z.zh);
      case Form::code:
        return fmt::format("def causes(a, b, parents={{'{1}': ['{0}'], '{2}': ['{0}']}}):\n"
                           "    return a in parents.get(b, [])  # causes('{1}', '{2}') == False",
                           z.code, a.code, b.code);
      case Form::math:
        return fmt::format("{0} → {1}, {0} → {2} ⊢ {1} ⫫ {2} | {0}", z.sym, a.sym, b.sym);
      case Form::structured:
        return fmt::format("P1: {0} -> {1} | P2: {0} -> {2} | Rule: Common cause | "
                           "Conclusion: {1} -/-> {2}",
                           z.code, a.code, b.code);
    }
    bad_form(f);
  };
  c.surface = [](const Inst& i, Form f) -> std::string {
    const auto& t = by_key(confounders(), i.text("triple"));
    const auto &z = t.a, &a = t.b, &b = t.c;
    switch (f) {
      case Form::en: return fmt::format("there is no causal effect of {} on {}", a.en, b.en);
      case Form::fr: return fmt::format("il n'y a pas d'effet causal {} sur {}", fr_de(a.fr), b.fr);
      case Form::zh: return fmt::format("{} dui {} meiyou yinguo xiaoying", a.zh, b.zh);
      case Form::code: return fmt::format("causes('{}', '{}') == False", a.code, b.code);
      case Form::math: return fmt::format("⊢ {} ⫫ {} | {}", a.sym, b.sym, z.sym);
      case Form::structured: return fmt::format("Conclusion: {} -/-> {}", a.code, b.code);
    }
    bad_form(f);
  };
  return c;
}

// 15. Interventional reasoning: back-door adjustment for P(Y=1 | do(X=1)).
ConceptImpl interventional() {
  ConceptImpl c;
  c.sample = [](KeyedRng& r) {
    const auto p0 = uniform_int(r, 1, 9);
    std::int64_t p1;
    do {
      p1 = uniform_int(r, 1, 9);
    } while (p1 == p0);
    return Params{ip("pz", uniform_int(r, 1, 9)), ip("py_z0", p0), ip("py_z1", p1)};
  };
  c.solve = [](const Inst& i) {
    const auto pz = i.integer("pz");
    return hundredths(i.integer("py_z0") * (10 - pz) + i.integer("py_z1") * pz);
  };
  c.render = [](const Inst& i, Form f) -> std::string {
    const auto pz = tenths(i.integer("pz")), q = tenths(10 - i.integer("pz"));
    const auto p0 = tenths(i.integer("py_z0")), p1 = tenths(i.integer("py_z1"));
    const auto& r = i.conclusion;
    switch (f) {
      case Form::en:
        return fmt::format("Z is a common cause of X and Y, with P(Z=1) = {}. P(Y=1 | X=1, Z=0) = {} "
                           "and P(Y=1 | X=1, Z=1) = {}. Adjusting for Z, P(Y=1 | do(X=1)) = {} × {} "
                           "+ {} × {}. Therefore P(Y=1 | do(X=1)) = {}.",
                           pz, p0, p1, p0, q, p1, pz, r);
      case Form::fr:
        return fmt::format("Z est une cause commune de X et Y, avec P(Z=1) = {}. P(Y=1 | X=1, Z=0) = {} "
                           "et P(Y=1 | X=1, Z=1) = {}. En ajustant sur Z, P(Y=1 | do(X=1)) = {} × {} "
                           "+ {} × {}. Donc P(Y=1 | do(X=1)) = {}.",
                           pz, p0, p1, p0, q, p1, pz, r);
      case Form::zh:
        return fmt::format("[zh] Z shi X he Y de gongtong yuanyin, P(Z=1) = {}. P(Y=1 | X=1, Z=0) = {}, "
                           "P(Y=1 | X=1, Z=1) = {}. Tiaozheng Z hou, P(Y=1 | do(X=1)) = {} × {} + {} × {}. "
                           "Suoyi P(Y=1 | do(X=1)) = {}.",
                           pz, p0, p1, p0, q, p1, pz, r);
      case Form::code:
        return fmt::format("def p_do(p_z={}, p_y_given_x_z=({}, {})):\n"
                           "    return p_y_given_x_z[0] * (1 - p_z) + p_y_given_x_z[1] * p_z  # {}",
                           pz, p0, p1, r);
      case Form::math:
        return fmt::format("P(Y | do(X)) = Σ_z P(Y | X, z) P(z) = {} · {} + {} · {} = {}", p0, q, p1,
                           pz, r);
      case Form::structured:
        return fmt::format("P1: P(Z=1)={} | P2: P(Y|X,Z=0)={} | P3: P(Y|X,Z=1)={} | "
                           "Rule: Backdoor adjustment | Conclusion: P(Y|do(X))={}",
                           pz, p0, p1, r);
    }
    bad_form(f);
  };
  c.surface = [](const Inst& i, Form f) -> std::string {
    const auto& r = i.conclusion;
    switch (f) {
      case Form::en:
      case Form::fr:
      case Form::zh: return "P(Y=1 | do(X=1)) = " + r;
      case Form::code: return "# " + r;
      case Form::math: return "= " + r;
      case Form::structured: return "Conclusion: P(Y|do(X))=" + r;
    }
    bad_form(f);
  };
  return c;
}

// 16. Direction composition on a grid.
struct Direction {
  std::string code;  // N, S, E, W
  int dx, dy;
  std::string en, fr_prep, zh;
};

const Direction& direction(const std::string& code) {
  static const std::vector<Direction> k = {
      {"N", 0, 1, "north", "au nord", "bei"},
      {"S", 0, -1, "south", "au sud", "nan"},
      {"E", 1, 0, "east", "à l'est", "dong"},
      {"W", -1, 0, "west", "à l'ouest", "xi"},
  };
  for (const auto& d : k)
    if (d.code == code) return d;
  throw InvalidArgument("unknown direction '" + code + "'");
}

struct Compound {
  std::string en, fr, zh;
};

Compound compound(const std::string& code) {
  // code is "<N|S><E|W>"
  const auto& ns = direction(code.substr(0, 1));
  const auto& ew = direction(code.substr(1, 1));
  const std::string fr_ew = ew.code == "E" ? "est" : "ouest";
  return {ns.en + "-" + ew.en, ns.fr_prep + "-" + fr_ew, ew.zh + ns.zh};
}

ConceptImpl direction_composition() {
  ConceptImpl c;
  c.sample = [](KeyedRng& r) {
    const auto names = distinct_people(r, 3);
    const std::string ns = r.below(2) ? "N" : "S";
    const std::string ew = r.below(2) ? "E" : "W";
    const bool ns_first = r.below(2) == 1;
    return Params{sp("x", names[0]), sp("y", names[1]), sp("z", names[2]),
                  sp("d1", ns_first ? ns : ew), sp("d2", ns_first ? ew : ns)};
  };
  c.solve = [](const Inst& i) {
    const auto& a = direction(i.text("d1"));
    const auto& b = direction(i.text("d2"));
    const int dx = a.dx + b.dx, dy = a.dy + b.dy;
    return std::string(dy > 0 ? "N" : "S") + (dx > 0 ? "E" : "W");
  };
  c.render = [](const Inst& i, Form f) -> std::string {
    const auto &x = i.text("x"), &y = i.text("y"), &z = i.text("z");
    const auto& a = direction(i.text("d1"));
    const auto& b = direction(i.text("d2"));
    const auto cp = compound(i.conclusion);
    const int dx = a.dx + b.dx, dy = a.dy + b.dy;
    switch (f) {
      case Form::en:
        return fmt::format("{} is {} of {}. {} is {} of {}. Therefore {} is {} of {}.", x, a.en, y, y,
                           b.en, z, x, cp.en, z);
      case Form::fr:
        return fmt::format("{} est {} de {}. {} est {} de {}. Donc {} est {} de {}.", x, a.fr_prep, y,
                           y, b.fr_prep, z, x, cp.fr, z);
      case Form::zh:
        return fmt::format("[zh] {} zai {} de {}bian. {} zai {} de {}bian. Suoyi {} zai {} de {}bian.",
                           x, y, a.zh, y, z, b.zh, x, z, cp.zh);
      case Form::code:
        return fmt::format("def compose(d1=({}, {}), d2=({}, {})):\n"
                           "    return (d1[0] + d2[0], d1[1] + d2[1])  # ({}, {}) == '{}'",
                           a.dx, a.dy, b.dx, b.dy, dx, dy, i.conclusion);
      case Form::math:
        return fmt::format("v({}, {}) = ({}, {}), v({}, {}) = ({}, {}) ⊢ v({}, {}) = ({}, {})", x, y,
                           a.dx, a.dy, y, z, b.dx, b.dy, x, z, dx, dy);
      case Form::structured:
        return fmt::format("P1: {} {} of {} | P2: {} {} of {} | Rule: Vector sum | "
                           "Conclusion: {} {} of {}",
                           x, a.code, y, y, b.code, z, x, i.conclusion, z);
    }
    bad_form(f);
  };
  c.surface = [](const Inst& i, Form f) -> std::string {
    const auto &x = i.text("x"), &z = i.text("z");
    const auto cp = compound(i.conclusion);
    const auto& a = direction(i.text("d1"));
    const auto& b = direction(i.text("d2"));
    switch (f) {
      case Form::en: return fmt::format("{} is {} of {}", x, cp.en, z);
      case Form::fr: return fmt::format("{} est {} de {}", x, cp.fr, z);
      case Form::zh: return fmt::format("{} zai {} de {}bian", x, z, cp.zh);
      case Form::code: return fmt::format("== '{}'", i.conclusion);
      case Form::math: return fmt::format("= ({}, {})", a.dx + b.dx, a.dy + b.dy);
      case Form::structured: return fmt::format("Conclusion: {} {} of {}", x, i.conclusion, z);
    }
    bad_form(f);
  };
  return c;
}

// 17. Containment transitivity.
ConceptImpl containment() {
  ConceptImpl c;
  c.sample = [](KeyedRng& r) { return Params{sp("chain", pick_key(container_chains(), r))}; };
  c.solve = [](const Inst& i) {
    const auto& t = by_key(container_chains(), i.text("chain"));
    return t.item.code + " in " + t.outer.code;
  };
  c.render = [](const Inst& i, Form f) -> std::string {
    const auto& t = by_key(container_chains(), i.text("chain"));
    const auto &a = t.item, &b = t.mid, &cc = t.outer;
    switch (f) {
      case Form::en:
        return fmt::format("{} is inside {}. {} is inside {}. Therefore {} is inside {}.",
                           capitalize(a.en), b.en, capitalize(b.en), cc.en, a.en, cc.en);
      case Form::fr:
        return fmt::format("{} est dans {}. {} est dans {}. Donc {} est dans {}.", capitalize(a.fr),
                           b.fr, capitalize(b.fr), cc.fr, a.fr, cc.fr);
      case Form::zh:
        return fmt::format("[zh] {} zai {} li. {} zai {} li. Suoyi {} zai {} li.", capitalize(a.zh),
                           b.zh, capitalize(b.zh), cc.zh, a.zh, cc.zh);
      case Form::code:
        return fmt::format("def is_inside(item, box, parent={{'{0}': '{1}', '{1}': '{2}'}}):\n"
                           "    while item in parent:\n        item = parent[item]\n"
                           "        if item == box:\n            return True\n"
                           "    return False  # is_inside('{0}', '{2}') == True",
                           a.code, b.code, cc.code);
      case Form::math:
        return fmt::format("{} ⊂ {}, {} ⊂ {} ⊢ {} ⊂ {}", a.sym, b.sym, b.sym, cc.sym, a.sym, cc.sym);
      case Form::structured:
        return fmt::format("P1: {} in {} | P2: {} in {} | Rule: Transitivity | Conclusion: {} in {}",
                           a.code, b.code, b.code, cc.code, a.code, cc.code);
    }
    bad_form(f);
  };
  c.surface = [](const Inst& i, Form f) -> std::string {
    const auto& t = by_key(container_chains(), i.text("chain"));
    const auto &a = t.item, &cc = t.outer;
    switch (f) {
      case Form::en: return fmt::format("{} is inside {}", a.en, cc.en);
      case Form::fr: return fmt::format("{} est dans {}", a.fr, cc.fr);
      case Form::zh: return fmt::format("{} zai {} li", a.zh, cc.zh);
      case Form::code: return fmt::format("is_inside('{}', '{}') == True", a.code, cc.code);
      case Form::math: return fmt::format("⊢ {} ⊂ {}", a.sym, cc.sym);
      case Form::structured: return fmt::format("Conclusion: {} in {}", a.code, cc.code);
    }
    bad_form(f);
  };
  return c;
}

// 18. Mental rotation of a vertex about the origin, counterclockwise.
std::pair<std::int64_t, std::int64_t> rotate(std::int64_t x, std::int64_t y, std::int64_t turns) {
  for (std::int64_t t = 0; t < turns; ++t) {
    const auto nx = -y;
    y = x;
    x = nx;
  }
  return {x, y};
}

ConceptImpl mental_rotation() {
  ConceptImpl c;
  c.sample = [](KeyedRng& r) {
    auto nonzero = [&r] {
      std::int64_t v;
      do {
        v = uniform_int(r, -5, 5);
      } while (v == 0);
      return v;
    };
    const auto x = nonzero();
    std::int64_t y;
    do {
      y = nonzero();
    } while (y == x || y == -x);
    return Params{ip("x", x), ip("y", y), ip("quarter_turns", uniform_int(r, 1, 3))};
  };
  c.solve = [](const Inst& i) {
    const auto [x, y] = rotate(i.integer("x"), i.integer("y"), i.integer("quarter_turns"));
    return point_text(x, y, false);
  };
  c.render = [](const Inst& i, Form f) -> std::string {
    const auto x = i.integer("x"), y = i.integer("y"), t = i.integer("quarter_turns");
    const auto [rx, ry] = rotate(x, y, t);
    const auto p = point_text(x, y, false), q = point_text(rx, ry, false);
    const auto deg = 90 * t;
    switch (f) {
      case Form::en:
        return fmt::format("A triangle has a vertex at {}. Rotate the triangle {} degrees "
                           "counterclockwise about the origin. Therefore the vertex moves to {}.",
                           p, deg, q);
      case Form::fr:
        return fmt::format("Un triangle a un sommet en {}. On tourne le triangle de {} degrés dans le "
                           "sens antihoraire autour de l'origine. Donc le sommet arrive en {}.",
                           p, deg, q);
      case Form::zh:
        return fmt::format("[zh] Sanjiaoxing you yi ge dingdian zai {}. Jiang sanjiaoxing rao yuandian "
                           "ni shizhen xuanzhuan {} du. Suoyi dingdian yidong dao {}.",
                           p, deg, q);
      case Form::code:
        return fmt::format("def rotate(x={}, y={}, quarter_turns={}):\n"
                           "    for _ in range(quarter_turns):\n        x, y = -y, x\n"
                           "    return (x, y)  # {}",
                           x, y, t, q);
      case Form::math:
        return fmt::format("R({}°) · {} = {}", deg, p, q);
      case Form::structured:
        return fmt::format("P1: vertex={} | P2: rotate={} CCW | Rule: (x,y)->(-y,x) | Conclusion: {}",
                           point_text(x, y, true), deg, point_text(rx, ry, true));
    }
    bad_form(f);
  };
  c.surface = [](const Inst& i, Form f) -> std::string {
    const auto [rx, ry] = rotate(i.integer("x"), i.integer("y"), i.integer("quarter_turns"));
    const auto q = point_text(rx, ry, false);
    switch (f) {
      case Form::en: return "the vertex moves to " + q;
      case Form::fr: return "le sommet arrive en " + q;
      case Form::zh: return "dingdian yidong dao " + q;
      case Form::code: return "# " + q;
      case Form::math: return "= " + q;
      case Form::structured: return "Conclusion: " + point_text(rx, ry, true);
    }
    bad_form(f);
  };
  return c;
}

struct Registry {
  std::vector<ConceptSpec> specs;
  std::vector<ConceptImpl> impls;
};

const Registry& registry() {
  static const Registry reg = [] {
    using K = SlotKind;
    Registry r;
    auto add = [&r](Domain d, std::string name, std::string key, std::vector<SlotSpec> schema,
                    std::string rule, ConceptImpl impl) {
      const int id = static_cast<int>(r.specs.size()) + 1;
      r.specs.push_back({id, d, std::move(name), std::move(key), std::move(schema), std::move(rule)});
      r.impls.push_back(std::move(impl));
    };
    add(Domain::arithmetic, "Multi-step evaluation", "multi_step_evaluation",
        {{"a", K::integer}, {"b", K::integer}, {"c", K::integer}, {"d", K::integer}, {"e", K::integer}},
        "value of (a + b) * c - d / e with e dividing d", multi_step());
    add(Domain::arithmetic, "Modular arithmetic", "modular_arithmetic",
        {{"a", K::integer}, {"m", K::integer}}, "remainder of a divided by m", modular());
    add(Domain::arithmetic, "Proportional reasoning", "proportional_reasoning",
        {{"count", K::integer}, {"unit", K::integer}, {"target", K::integer}},
        "price of target items when count items cost count * unit", proportional());
    add(Domain::arithmetic, "GCD (Euclidean)", "gcd_euclidean", {{"a", K::integer}, {"b", K::integer}},
        "greatest common divisor of a and b", gcd_concept());
    add(Domain::logic, "Categorical syllogism", "categorical_syllogism", {{"terms", K::lexicon_entry}},
        "all small are big, from all middle are big and all small are middle", syllogism());
    add(Domain::logic, "Modus ponens", "modus_ponens", {{"pair", K::lexicon_entry}},
        "consequent, from the implication and its antecedent", modus_ponens());
    add(Domain::logic, "Contrapositive", "contrapositive", {{"pair", K::lexicon_entry}},
        "negated antecedent, from the implication and the negated consequent", contrapositive());
    add(Domain::logic, "De Morgan's laws", "de_morgan", {{"pair", K::lexicon_entry}},
        "disjunction of negations, from a negated conjunction", de_morgan());
    add(Domain::relational, "Transitive ordering", "transitive_ordering",
        {{"x", K::entity}, {"y", K::entity}, {"z", K::entity}, {"attribute", K::lexicon_entry}},
        "x is the greatest, from x > y and y > z", transitive());
    add(Domain::relational, "Set intersection", "set_intersection",
        {{"A", K::integer_set}, {"B", K::integer_set}}, "elements common to A and B",
        set_operation(false));
    add(Domain::relational, "Set difference", "set_difference",
        {{"A", K::integer_set}, {"B", K::integer_set}}, "elements of A not in B", set_operation(true));
    add(Domain::relational, "Function composition", "function_composition",
        {{"fa", K::integer}, {"fb", K::integer}, {"ga", K::integer}, {"gb", K::integer}, {"x", K::integer}},
        "f(g(x)) for affine f(t) = fa t + fb and g(t) = ga t + gb", composition());
    add(Domain::causal, "Causal chain", "causal_chain", {{"chain", K::lexicon_entry}},
        "first event causes the last, from two causal links", causal_chain());
    add(Domain::causal, "Confounding", "confounding", {{"triple", K::lexicon_entry}},
        "no causal effect between two effects of a common cause", confounding());
    add(Domain::causal, "Interventional", "interventional",
        {{"pz", K::integer}, {"py_z0", K::integer}, {"py_z1", K::integer}},
        "P(Y=1 | do(X=1)) by back-door adjustment over Z", interventional());
    add(Domain::spatial, "Direction composition", "direction_composition",
        {{"x", K::entity}, {"y", K::entity}, {"z", K::entity}, {"d1", K::direction}, {"d2", K::direction}},
        "compound direction of x from z, from x d1 of y and y d2 of z", direction_composition());
    add(Domain::spatial, "Containment", "containment", {{"chain", K::lexicon_entry}},
        "item is inside the outer container, from two containment facts", containment());
    add(Domain::spatial, "Mental rotation", "mental_rotation",
        {{"x", K::integer}, {"y", K::integer}, {"quarter_turns", K::integer}},
        "vertex position after counterclockwise quarter turns about the origin", mental_rotation());
    return r;
  }();
  return reg;
}

const ConceptImpl& impl_of(int concept_id) {
  const auto& r = registry();
  if (concept_id < 1 || concept_id > static_cast<int>(r.impls.size()))
    throw InvalidArgument("unknown concept id " + std::to_string(concept_id));
  return r.impls[static_cast<std::size_t>(concept_id - 1)];
}

bool valid_form(Form f) {
  const int i = static_cast<int>(f);
  return i >= 0 && i < kFormCount;
}

// ---------------------------------------------------------------------------
// UTF-8 helpers.

// Decodes UTF-8; returns false on malformed input.
bool decode_utf8(std::string_view s, std::vector<char32_t>& out) {
  out.clear();
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    char32_t cp;
    int extra;
    if (c < 0x80) {
      cp = c;
      extra = 0;
    } else if ((c & 0xE0) == 0xC0) {
      cp = c & 0x1F;
      extra = 1;
    } else if ((c & 0xF0) == 0xE0) {
      cp = c & 0x0F;
      extra = 2;
    } else if ((c & 0xF8) == 0xF0) {
      cp = c & 0x07;
      extra = 3;
    } else {
      return false;
    }
    if (i + static_cast<std::size_t>(extra) >= s.size()) return false;
    for (int k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Reject overlong encodings and surrogates.
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) || (extra == 3 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
      return false;
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return true;
}

void append_utf8(std::string& out, char32_t cp) {
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

bool is_space(char32_t c) {
  return c == U' ' || (c >= 0x09 && c <= 0x0D) || c == 0x85 || c == 0xA0 || c == 0x1680 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F ||
         c == 0x205F || c == 0x3000;
}

bool is_punct(char32_t c) {
  if (c < 0x80) return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
                       (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
  return c == 0xA1 || c == 0xA7 || c == 0xAB || c == 0xB6 || c == 0xB7 || c == 0xBB || c == 0xBF ||
         (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) ||
         (c >= 0x3001 && c <= 0x3003) || (c >= 0x3008 && c <= 0x3011) ||
         (c >= 0x3014 && c <= 0x301F) || (c >= 0xFF01 && c <= 0xFF0F) ||
         (c >= 0xFF1A && c <= 0xFF20) || (c >= 0xFF3B && c <= 0xFF40) ||
         (c >= 0xFF5B && c <= 0xFF65);
}

std::vector<char32_t> trimmed_code_points(std::string_view text) {
  std::vector<char32_t> cps;
  if (!decode_utf8(text, cps)) throw InvalidArgument("text is not valid UTF-8");
  auto first = std::find_if_not(cps.begin(), cps.end(), is_space);
  auto last = std::find_if_not(cps.rbegin(), std::make_reverse_iterator(first), is_space).base();
  return {first, last};
}

}  // namespace

// ---------------------------------------------------------------------------

const std::vector<ConceptSpec>& concept_specs() { return registry().specs; }

const ConceptSpec& concept_spec(int concept_id) {
  const auto& s = concept_specs();
  if (concept_id < 1 || concept_id > static_cast<int>(s.size()))
    throw InvalidArgument("unknown concept id " + std::to_string(concept_id));
  return s[static_cast<std::size_t>(concept_id - 1)];
}

std::int64_t CanonicalInstance::integer(std::string_view name) const {
  for (const auto& p : parameters)
    if (p.name == name) {
      if (const auto* v = std::get_if<std::int64_t>(&p.value)) return *v;
      throw InvalidArgument("parameter '" + std::string(name) + "' is not an integer");
    }
  throw InvalidArgument("missing parameter '" + std::string(name) + "'");
}

const std::string& CanonicalInstance::text(std::string_view name) const {
  for (const auto& p : parameters)
    if (p.name == name) {
      if (const auto* v = std::get_if<std::string>(&p.value)) return *v;
      throw InvalidArgument("parameter '" + std::string(name) + "' is not text");
    }
  throw InvalidArgument("missing parameter '" + std::string(name) + "'");
}

std::vector<CanonicalInstance> canonical_instances(int concept_id, std::uint64_t seed) {
  const auto& impl = impl_of(concept_id);
  std::vector<CanonicalInstance> out;
  for (int idx = 0; idx < kInstancesPerConcept; ++idx) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      KeyedRng rng{seed, static_cast<std::uint64_t>(concept_id), static_cast<std::uint64_t>(idx),
                   attempt};
      CanonicalInstance inst{concept_id, idx, impl.sample(rng), {}};
      inst.conclusion = impl.solve(inst);
      const bool clash = std::any_of(out.begin(), out.end(), [&](const CanonicalInstance& o) {
        return o.conclusion == inst.conclusion;
      });
      if (!clash) {
        out.push_back(std::move(inst));
        break;
      }
      if (attempt > 10000)
        throw Error(fmt::format("concept {}: cannot draw a distinct instance {}", concept_id, idx));
    }
  }
  return out;
}

std::string solve(const CanonicalInstance& instance) { return impl_of(instance.concept_id).solve(instance); }

std::string render_form(const CanonicalInstance& instance, Form form) {
  if (!valid_form(form))
    throw InvalidArgument("unknown form enum value " + std::to_string(static_cast<int>(form)));
  auto text = impl_of(instance.concept_id).render(instance, form);
  if (text.empty())
    throw Error(fmt::format("renderer produced empty text for concept {} form {}", instance.concept_id,
                            to_string(form)));
  return text;
}

std::string conclusion_surface(const CanonicalInstance& instance, Form form) {
  if (!valid_form(form))
    throw InvalidArgument("unknown form enum value " + std::to_string(static_cast<int>(form)));
  return impl_of(instance.concept_id).surface(instance, form);
}

StimulusSet generate_benchmark(std::uint64_t seed) {
  StimulusSet set;
  set.seed = seed;
  set.benchmark_version = std::string(kBenchmarkVersion);
  set.stimuli.reserve(kStimulusCount);
  for (const auto& spec : concept_specs()) {
    for (const auto& inst : canonical_instances(spec.concept_id, seed)) {
      for (Form f : kAllForms) {
        std::string text;
        try {
          text = render_form(inst, f);
        } catch (const std::exception& e) {
          throw Error(fmt::format("renderer failure for concept {} ({}) form {}: {}", spec.concept_id,
                                  spec.name, to_string(f), e.what()));
        }
        set.stimuli.push_back({fmt::format("c{:02d}_i{}_{}", spec.concept_id, inst.instance_idx,
                                           to_string(f)),
                               spec.concept_id, inst.instance_idx, f, std::move(text), spec.domain});
      }
    }
  }
  return set;
}

ValidationReport validate_stimulus_set(const StimulusSet& set) {
  ValidationReport rep;
  auto& v = rep.violations;
  if (set.stimuli.size() != static_cast<std::size_t>(kStimulusCount))
    v.push_back(fmt::format("set has {} stimuli, expected {}", set.stimuli.size(), kStimulusCount));

  std::map<int, int> per_form, per_concept;
  std::map<std::tuple<int, int, int>, int> cells;
  std::set<std::string> ids;
  std::vector<char32_t> scratch;
  for (const auto& s : set.stimuli) {
    if (!valid_form(s.form)) {
      v.push_back(fmt::format("stimulus {} has invalid form value {}", s.stimulus_id,
                              static_cast<int>(s.form)));
      continue;
    }
    ++per_form[form_index(s.form)];
    ++per_concept[s.concept_id];
    ++cells[{s.concept_id, s.instance_idx, form_index(s.form)}];
    if (!ids.insert(s.stimulus_id).second) v.push_back("duplicate stimulus_id " + s.stimulus_id);
    if (s.concept_id < 1 || s.concept_id > kConceptCount)
      v.push_back(fmt::format("stimulus {} has concept_id {} outside 1..{}", s.stimulus_id,
                              s.concept_id, kConceptCount));
    else if (concept_spec(s.concept_id).domain != s.domain)
      v.push_back(fmt::format("stimulus {} has domain {} but concept {} is {}", s.stimulus_id,
                              to_string(s.domain), s.concept_id,
                              to_string(concept_spec(s.concept_id).domain)));
    if (s.instance_idx < 0 || s.instance_idx >= kInstancesPerConcept)
      v.push_back(fmt::format("stimulus {} has instance_idx {} outside 0..{}", s.stimulus_id,
                              s.instance_idx, kInstancesPerConcept - 1));
    if (s.text.empty())
      v.push_back(fmt::format("stimulus {} has empty text", s.stimulus_id));
    else if (!decode_utf8(s.text, scratch))
      v.push_back(fmt::format("stimulus {} text is not valid UTF-8", s.stimulus_id));
  }
  const int per_form_expected = kConceptCount * kInstancesPerConcept;
  for (Form f : kAllForms) {
    const int n = per_form[form_index(f)];
    if (n != per_form_expected)
      v.push_back(fmt::format("form {} has {} items, expected {}", to_string(f), n, per_form_expected));
  }
  const int per_concept_expected = kInstancesPerConcept * kFormCount;
  for (int c = 1; c <= kConceptCount; ++c) {
    const int n = per_concept[c];
    if (n != per_concept_expected)
      v.push_back(fmt::format("concept {} has {} items, expected {}", c, n, per_concept_expected));
  }
  for (const auto& [key, n] : cells)
    if (n > 1)
      v.push_back(fmt::format("duplicate (concept {}, instance {}, form {}) appears {} times",
                              std::get<0>(key), std::get<1>(key),
                              to_string(static_cast<Form>(std::get<2>(key))), n));
  return rep;
}

LabelTable label_table(const StimulusSet& set) {
  LabelTable t;
  t.rows.reserve(set.stimuli.size());
  for (const auto& s : set.stimuli)
    t.rows.push_back({s.stimulus_id, s.concept_id, s.form, s.instance_idx, s.domain});
  return t;
}

std::string to_jsonl(const StimulusSet& set) {
  std::string out;
  Json header;
  header["benchmark_version"] = set.benchmark_version;
  header["seed"] = set.seed;
  header["count"] = set.stimuli.size();
  out += header.dump() + "\n";
  for (const auto& s : set.stimuli) {
    Json j;
    j["stimulus_id"] = s.stimulus_id;
    j["concept_id"] = s.concept_id;
    j["concept_name"] = (s.concept_id >= 1 && s.concept_id <= kConceptCount)
                            ? concept_spec(s.concept_id).name
                            : std::string();
    j["domain"] = std::string(to_string(s.domain));
    j["instance_idx"] = s.instance_idx;
    j["form"] = std::string(to_string(s.form));
    j["text"] = s.text;
    out += j.dump() + "\n";
  }
  return out;
}

void write_stimulus_file(const StimulusSet& set, std::ostream& out) { out << to_jsonl(set); }

StimulusSet read_stimulus_file(std::istream& in) {
  StimulusSet set;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw FormatError(fmt::format("stimulus file line {}: {}", lineno, e.what()));
    }
    if (j.contains("benchmark_version")) {
      set.benchmark_version = j.at("benchmark_version").get<std::string>();
      set.seed = j.value("seed", std::uint64_t{0});
      continue;
    }
    try {
      Stimulus s;
      s.stimulus_id = j.at("stimulus_id").get<std::string>();
      s.concept_id = j.at("concept_id").get<int>();
      s.instance_idx = j.at("instance_idx").get<int>();
      s.form = parse_form(j.at("form").get<std::string>());
      s.domain = parse_domain(j.at("domain").get<std::string>());
      s.text = j.value("text", std::string());
      set.stimuli.push_back(std::move(s));
    } catch (const Json::exception& e) {
      throw FormatError(fmt::format("stimulus file line {}: {}", lineno, e.what()));
    }
  }
  return set;
}

LabelTable read_label_table(std::istream& in) {
  const auto set = read_stimulus_file(in);
  return label_table(set);
}

std::vector<std::string> tokenize(std::string_view text) {
  const auto cps = trimmed_code_points(text);
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) tokens.push_back(std::move(cur));
    cur.clear();
  };
  for (char32_t c : cps) {
    if (is_space(c)) {
      flush();
    } else if (is_punct(c)) {
      flush();
      std::string p;
      append_utf8(p, c);
      tokens.push_back(std::move(p));
    } else {
      append_utf8(cur, c);
    }
  }
  flush();
  return tokens;
}

SurfaceFeatures surface_features(std::string_view text) {
  const auto cps = trimmed_code_points(text);
  if (cps.empty()) throw InvalidArgument("surface_features: empty text");
  std::map<char32_t, int> counts;
  for (char32_t c : cps) ++counts[c];
  const double n = static_cast<double>(cps.size());
  double h = 0.0;
  for (const auto& [c, k] : counts) {
    const double p = k / n;
    h -= p * std::log(p);
  }
  const auto tokens = tokenize(text);
  const std::set<std::string> distinct(tokens.begin(), tokens.end());
  SurfaceFeatures f;
  f.token_count = static_cast<int>(tokens.size());
  f.char_entropy = h == 0.0 ? 0.0 : h;  // avoid -0.0
  f.type_token_ratio =
      tokens.empty() ? 0.0 : static_cast<double>(distinct.size()) / static_cast<double>(tokens.size());
  return f;
}

}  // namespace triform::bench
