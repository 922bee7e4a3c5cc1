//! Keyword filtering baseline: case-insensitive substring containment and
//! token-level fuzzy matching under a Levenshtein budget.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Label, Pool};
use crate::error::{Error, Result};
use crate::tokenize::tokens;

/// Levenshtein distance over Unicode scalar values with unit costs for
/// insertion, deletion and substitution.
pub fn edit_distance(x: &str, y: &str) -> usize {
    edit_distance_within(x, y, usize::MAX).expect("unbounded distance always completes")
}

/// Like [`edit_distance`] but gives up once the distance must exceed `max`.
pub fn edit_distance_within(x: &str, y: &str, max: usize) -> Option<usize> {
    if x.is_ascii() && y.is_ascii() {
        return distance_seq(x.as_bytes(), y.as_bytes(), max);
    }
    let x: Vec<char> = x.chars().collect();
    let y: Vec<char> = y.chars().collect();
    distance_seq(&x, &y, max)
}

const INLINE_ROW: usize = 64;

fn distance_seq<T: PartialEq>(x: &[T], y: &[T], max: usize) -> Option<usize> {
    if x.len().abs_diff(y.len()) > max {
        return None;
    }
    // Keep the shorter string along the row.
    let (x, y) = if x.len() < y.len() { (y, x) } else { (x, y) };
    let width = y.len() + 1;
    if width <= INLINE_ROW {
        let mut rows = [0usize; 2 * INLINE_ROW];
        let (prev, cur) = rows.split_at_mut(INLINE_ROW);
        two_row_dp(x, y, max, &mut prev[..width], &mut cur[..width])
    } else {
        let (mut prev, mut cur) = (vec![0; width], vec![0; width]);
        two_row_dp(x, y, max, &mut prev, &mut cur)
    }
}

fn two_row_dp<'r, T: PartialEq>(x: &[T], y: &[T], max: usize, mut prev: &'r mut [usize], mut cur: &'r mut [usize]) -> Option<usize> {
    for (j, v) in prev.iter_mut().enumerate() {
        *v = j;
    }
    for (i, xc) in x.iter().enumerate() {
        cur[0] = i + 1;
        let mut row_min = cur[0];
        for (j, yc) in y.iter().enumerate() {
            let substitute = prev[j] + usize::from(xc != yc);
            let delete = prev[j + 1] + 1;
            let insert = cur[j] + 1;
            cur[j + 1] = substitute.min(delete).min(insert);
            row_min = row_min.min(cur[j + 1]);
        }
        // Row minima never decrease, so the final distance is at least this.
        if row_min > max {
            return None;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let d = prev[y.len()];
    (d <= max).then_some(d)
}

/// Ordered, duplicate-free list of lowercase keywords.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordList {
    keywords: Vec<String>,
    languages: BTreeSet<String>,
}

impl KeywordList {
    /// Lowercases and trims every keyword. Repeated keywords keep their first
    /// position; an empty list or an empty keyword is rejected.
    pub fn new<I, S>(keywords: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = HashSet::new();
        let mut list = Vec::new();
        for kw in keywords {
            let kw = kw.as_ref().trim().to_lowercase();
            if kw.is_empty() {
                return Err(Error::invalid("keywords must be nonempty"));
            }
            if seen.insert(kw.clone()) {
                list.push(kw);
            }
        }
        if list.is_empty() {
            return Err(Error::invalid("keyword list is empty"));
        }
        Ok(KeywordList {
            keywords: list,
            languages: BTreeSet::new(),
        })
    }

    pub fn with_languages<I, S>(mut self, languages: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.languages = languages.into_iter().map(|l| l.as_ref().to_lowercase()).collect();
        self
    }

    /// One keyword per line; blank lines and `#` comments are skipped.
    pub fn parse(contents: &str) -> Result<Self> {
        Self::new(
            contents
                .lines()
                .map(|line| line.split('#').next().unwrap_or("").trim())
                .filter(|line| !line.is_empty()),
        )
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let contents = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&contents)
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    pub fn languages(&self) -> &BTreeSet<String> {
        &self.languages
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    /// Keywords for the generic CrisisLex-derived test set.
    pub fn crisislex() -> Self {
        Self::new([
            "earthquake", "volcano", "landslide", "fire", "flood", "tornado", "typhoon",
            "erdbeben", "vulkan", "erdrutsch", "feuer", "flut", "überschwemmung", "wirbelsturm",
            "taifun", "terremoto", "volcán", "deslizamiento", "incendio", "inundación", "tifón",
            "tremblement de terre", "volcan", "glissement de terrain", "incendie", "inondation",
            "tornade", "typhon",
        ])
        .expect("builtin list is valid")
        .with_languages(["en", "de", "es", "it"])
    }

    /// Keywords for the 2021 Germany flood.
    pub fn germany_flood() -> Self {
        Self::new([
            "flut", "hochwasser", "überschwemmung", "inundation", "flood", "disaster",
            "verstroming", "hoogwater", "vloed", "inondation", "crue", "marée haute",
        ])
        .expect("builtin list is valid")
        .with_languages(["de", "en", "nl", "fr"])
    }

    /// Keywords for the 2023 Chile forest fires.
    pub fn chile_forest_fires() -> Self {
        Self::new(["incendio", "forest fire", "fuego forestal", "bosque quemado"])
            .expect("builtin list is valid")
            .with_languages(["es", "en"])
    }

    /// Keywords used to narrow the raw Chile collection before labeling.
    pub fn chile_prefilter() -> Self {
        Self::new(["incendio", "fuego", "fire"]).expect("builtin list is valid")
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "crisislex" => Some(Self::crisislex()),
            "germany-flood" => Some(Self::germany_flood()),
            "chile-forest-fires" => Some(Self::chile_forest_fires()),
            "chile-prefilter" => Some(Self::chile_prefilter()),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EditDistanceBudget(pub usize);

impl Default for EditDistanceBudget {
    fn default() -> Self {
        EditDistanceBudget(2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    Exact,
    Fuzzy,
}

impl FromStr for MatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(MatchMode::Exact),
            "fuzzy" => Ok(MatchMode::Fuzzy),
            other => Err(Error::invalid(format!("unknown match mode `{other}`"))),
        }
    }
}

/// True iff some keyword is a substring of the lowercased text.
pub fn match_exact(text: &str, keywords: &KeywordList) -> bool {
    let lower = text.to_lowercase();
    keywords.keywords.iter().any(|kw| lower.contains(kw.as_str()))
}

/// True iff some window of text tokens, as long as the keyword in tokens and
/// joined by single spaces, lies within `budget` edits of the keyword.
pub fn match_fuzzy(text: &str, keywords: &KeywordList, budget: EditDistanceBudget) -> bool {
    let text_tokens = tokens(text);
    keywords.keywords.iter().any(|kw| {
        let kw_tokens = tokens(kw);
        if kw_tokens.is_empty() || kw_tokens.len() > text_tokens.len() {
            return false;
        }
        let kw_chars: Vec<char> = kw_tokens.join(" ").chars().collect();
        text_tokens.windows(kw_tokens.len()).any(|window| {
            let window_chars: Vec<char> = window.join(" ").chars().collect();
            distance_seq(&window_chars, &kw_chars, budget.0).is_some()
        })
    })
}

pub fn matches(text: &str, keywords: &KeywordList, mode: MatchMode, budget: EditDistanceBudget) -> bool {
    match mode {
        MatchMode::Exact => match_exact(text, keywords),
        MatchMode::Fuzzy => match_fuzzy(text, keywords, budget),
    }
}

/// Predicts `related` for every matched document and `unrelated` otherwise.
pub fn classify_pool(
    pool: &Pool,
    keywords: &KeywordList,
    mode: MatchMode,
    budget: EditDistanceBudget,
) -> Result<BTreeMap<String, Label>> {
    if pool.is_empty() {
        return Err(Error::invalid("cannot classify an empty pool"));
    }
    let predictions: Vec<(String, Label)> = pool
        .documents()
        .par_iter()
        .map(|doc| {
            let related = matches(&doc.text, keywords, mode, budget);
            (doc.id.clone(), Label::from_related(related))
        })
        .collect();
    Ok(predictions.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use proptest::prelude::*;
    use std::collections::HashMap;

    /// Memoized recursion, written directly from the base cases and the
    /// three-way minimum.
    fn oracle(x: &[char], y: &[char]) -> usize {
        fn ed(i: usize, j: usize, x: &[char], y: &[char], memo: &mut HashMap<(usize, usize), usize>) -> usize {
            if i == 0 {
                return j;
            }
            if j == 0 {
                return i;
            }
            if let Some(&v) = memo.get(&(i, j)) {
                return v;
            }
            let v = (ed(i - 1, j, x, y, memo) + 1)
                .min(ed(i, j - 1, x, y, memo) + 1)
                .min(ed(i - 1, j - 1, x, y, memo) + usize::from(x[i - 1] != y[j - 1]));
            memo.insert((i, j), v);
            v
        }
        ed(x.len(), y.len(), x, y, &mut HashMap::new())
    }

    fn oracle_str(x: &str, y: &str) -> usize {
        oracle(&x.chars().collect::<Vec<_>>(), &y.chars().collect::<Vec<_>>())
    }

    fn kw(words: &[&str]) -> KeywordList {
        KeywordList::new(words).unwrap()
    }

    #[test]
    fn edit_distance_examples() {
        assert_eq!(edit_distance("", "abc"), 3);
        assert_eq!(edit_distance("flood", "flood"), 0);
        assert_eq!(oracle_str("kitten", "sitting"), 3);
        assert_eq!(edit_distance("kitten", "sitting"), 3);
        assert_eq!(edit_distance("überschwemmung", "uberschwemmung"), 1);
        // No transpositions.
        assert_eq!(edit_distance("ab", "ba"), 2);
    }

    #[test]
    fn bounded_distance_aborts() {
        assert_eq!(edit_distance_within("flood", "floood", 2), Some(1));
        assert_eq!(edit_distance_within("frost", "flood", 2), None);
        assert_eq!(edit_distance_within("a", "abcd", 2), None);
        assert_eq!(edit_distance_within("abc", "xyz", 3), Some(3));
    }

    #[test]
    fn exhaustive_short_strings_match_oracle() {
        let alphabet = ['a', 'b', 'c'];
        let mut words = vec![String::new()];
        let mut frontier = vec![String::new()];
        for _ in 0..4 {
            frontier = frontier
                .iter()
                .flat_map(|w| alphabet.iter().map(move |c| format!("{w}{c}")))
                .collect();
            words.extend(frontier.iter().cloned());
        }
        for x in &words {
            for y in &words {
                assert_eq!(edit_distance(x, y), oracle_str(x, y), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn exact_matching_examples() {
        assert!(match_exact("Hochwasser in Ahrweiler", &KeywordList::germany_flood()));
        assert!(!match_exact("sunny day", &kw(&["flood"])));
        assert!(match_exact("TYPHOON warning", &kw(&["typhoon"])));
        assert!(match_exact("ÜBERSCHWEMMUNG im Tal", &kw(&["überschwemmung"])));
    }

    #[test]
    fn fuzzy_matching_examples() {
        let flood = kw(&["flood"]);
        assert!(match_fuzzy("big floood coming", &flood, EditDistanceBudget(2)));
        assert_eq!(edit_distance("frost", "flood"), 3);
        assert!(!match_fuzzy("frost", &flood, EditDistanceBudget(2)));
        assert!(match_fuzzy("Marée-haute ce soir", &kw(&["marée haute"]), EditDistanceBudget(0)));
        assert!(match_fuzzy("a forrest fire", &kw(&["forest fire"]), EditDistanceBudget(1)));
        assert!(!match_fuzzy("fire", &kw(&["forest fire"]), EditDistanceBudget(2)));
    }

    #[test]
    fn substring_match_without_token_match() {
        let flut = kw(&["flut"]);
        assert!(match_exact("Die Flutwelle kam nachts", &flut));
        assert!(!match_fuzzy("Die Flutwelle kam nachts", &flut, EditDistanceBudget(2)));
    }

    #[test]
    fn keyword_list_rules() {
        assert!(KeywordList::new(Vec::<String>::new()).is_err());
        assert!(KeywordList::new(["flood", "  "]).is_err());
        let list = KeywordList::parse("# floods\nFlood\n\nflut # de\nflood\n").unwrap();
        assert_eq!(list.keywords(), ["flood", "flut"]);
        assert_eq!(KeywordList::germany_flood().len(), 12);
        assert_eq!(KeywordList::crisislex().len(), 28);
        assert!(KeywordList::parse("# nothing\n").is_err());
    }

    #[test]
    fn classify_crafted_pool() {
        let docs = [
            ("1", "Flood warning for the valley"),
            ("2", "great pizza tonight"),
            ("3", "Hochwasser erreicht die Brücke"),
            ("4", "nothing to see"),
            ("5", "fire near the highway"),
            ("6", "sunny and warm"),
        ];
        let pool = Pool::from_documents(
            docs.iter().map(|(id, t)| Document::new(*id, t)).collect(),
            false,
        )
        .unwrap();
        let keywords = kw(&["flood", "hochwasser", "fire"]);
        let preds = classify_pool(&pool, &keywords, MatchMode::Exact, EditDistanceBudget::default()).unwrap();
        let related: Vec<_> = preds.iter().filter(|(_, l)| l.is_related()).map(|(id, _)| id.as_str()).collect();
        assert_eq!(related, ["1", "3", "5"]);
        assert_eq!(pool.prefilter(&keywords).len(), 3);
        assert!(classify_pool(&Pool::empty(), &keywords, MatchMode::Exact, EditDistanceBudget(2)).is_err());
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(x in "[a-dä]{0,12}", y in "[a-dä]{0,12}", z in "[a-dä]{0,12}") {
            let dxy = edit_distance(&x, &y);
            prop_assert_eq!(dxy, edit_distance(&y, &x));
            prop_assert_eq!(edit_distance(&x, &x), 0);
            prop_assert!(dxy <= edit_distance(&x, &z) + edit_distance(&z, &y));
            let (lx, ly) = (x.chars().count(), y.chars().count());
            prop_assert!(lx.abs_diff(ly) <= dxy && dxy <= lx.max(ly));
            prop_assert_eq!(dxy, oracle_str(&x, &y));
        }

        #[test]
        fn bounded_agrees_with_unbounded(x in "[ab]{0,10}", y in "[ab]{0,10}", max in 0usize..6) {
            let d = edit_distance(&x, &y);
            prop_assert_eq!(edit_distance_within(&x, &y, max), (d <= max).then_some(d));
        }

        #[test]
        fn fuzzy_monotone_in_budget(text in "[a-f ]{0,30}", word in "[a-f]{1,6}", budget in 0usize..4) {
            let list = KeywordList::new([word.as_str()]).unwrap();
            if match_fuzzy(&text, &list, EditDistanceBudget(budget)) {
                prop_assert!(match_fuzzy(&text, &list, EditDistanceBudget(budget + 1)));
            }
            let token_exact = tokens(&text).iter().any(|t| t == &word);
            prop_assert_eq!(match_fuzzy(&text, &list, EditDistanceBudget(0)), token_exact);
        }
    }
}
