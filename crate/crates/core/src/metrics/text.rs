use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

/// Lowercased alphanumeric runs; everything else separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> BTreeMap<&[String], usize> {
    let mut m = BTreeMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// Clipped n-gram matches and total candidate n-grams.
fn modified_precision(cand: &[String], refr: &[String], n: usize) -> (usize, usize) {
    let c = ngram_counts(cand, n);
    let r = ngram_counts(refr, n);
    let matched = c.iter().map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0))).sum();
    (matched, cand.len().saturating_sub(n - 1))
}

/// Sentence BLEU-1 through BLEU-`max_n` (`max_n` is clamped to 1..=4).
///
/// Orders above one with no matches use `(m + 1) / (t + 1)`.
pub fn bleu(candidate: &str, reference: &str, max_n: usize) -> Vec<f64> {
    let max_n = max_n.clamp(1, 4);
    let cand = tokenize(candidate);
    let refr = tokenize(reference);
    if cand.is_empty() {
        return alloc::vec![0.0; max_n];
    }
    let (c, r) = (cand.len() as f64, refr.len() as f64);
    let bp = if c > r { 1.0 } else { libm::exp(1.0 - r / c) };
    let mut log_sum = 0.0;
    let mut out = Vec::with_capacity(max_n);
    for n in 1..=max_n {
        let (m, t) = modified_precision(&cand, &refr, n);
        let p = if m == 0 && n > 1 {
            1.0 / (t as f64 + 1.0)
        } else if t == 0 {
            0.0
        } else {
            m as f64 / t as f64
        };
        log_sum += if p > 0.0 { libm::log(p) } else { f64::NEG_INFINITY };
        let score = bp * libm::exp(log_sum / n as f64);
        out.push(if score.is_finite() { score } else { 0.0 });
    }
    out
}

/// Token-level F1 between two texts, using bag-of-token overlap.
pub fn token_f1(a: &str, b: &str) -> f64 {
    let (ta, tb) = (tokenize(a), tokenize(b));
    if ta.is_empty() || tb.is_empty() {
        return if ta.is_empty() && tb.is_empty() { 1.0 } else { 0.0 };
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &tb {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &ta {
        if let Some(k) = counts.get_mut(t.as_str()) {
            if *k > 0 {
                *k -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let p = common as f64 / ta.len() as f64;
    let r = common as f64 / tb.len() as f64;
    2.0 * p * r / (p + r)
}

/// True when the token sequence of `phrase` occurs contiguously in `text`.
pub fn mentions(text: &str, phrase: &str) -> bool {
    position_of(&tokenize(text), phrase).is_some()
}

/// Token index of the first contiguous occurrence of `phrase`.
pub fn position_of(tokens: &[String], phrase: &str) -> Option<usize> {
    let p = tokenize(phrase);
    if p.is_empty() || p.len() > tokens.len() {
        return None;
    }
    tokens.windows(p.len()).position(|w| w == p.as_slice())
}
