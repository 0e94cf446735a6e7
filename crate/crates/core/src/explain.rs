//! Interpretability exports: class-wise vote scores, clause activation maps,
//! and human-readable clause rules.

use serde::{Deserialize, Serialize};

use crate::binarizer::QuantileBinner;
use crate::error::{Error, Result};
use crate::tm::{ClauseMode, Polarity, TsetlinModel, VoteVector};

/// Unclamped per-class vote scores for one input.
pub fn class_votes(model: &TsetlinModel, bits: &[u8]) -> Result<VoteVector> {
    model.vote_vector(bits)
}

/// Which clauses fired on one input: a C×m binary matrix with a polarity
/// annotation per clause column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseActivationMap {
    /// `rows[c][j]` is 1 iff clause `j` of class `c` fired (inference mode).
    pub rows: Vec<Vec<u8>>,
    /// Polarity of clause column `j`, identical across class rows.
    pub polarities: Vec<Polarity>,
}

impl ClauseActivationMap {
    /// Polarity-weighted sum of one class row; equals that class's vote.
    pub fn signed_row_sum(&self, class: usize) -> i32 {
        self.rows[class]
            .iter()
            .zip(&self.polarities)
            .map(|(&fired, p)| i32::from(fired) * p.sign())
            .sum()
    }

    /// CSV grid: one row per class, one column per clause, with a polarity
    /// header row.
    pub fn to_csv_string(&self, class_names: &[String]) -> String {
        let mut out = String::from("class");
        for (j, p) in self.polarities.iter().enumerate() {
            let sign = if p.sign() > 0 { "+" } else { "-" };
            out.push_str(&format!(",clause{j}{sign}"));
        }
        out.push('\n');
        for (c, row) in self.rows.iter().enumerate() {
            out.push_str(&class_names[c]);
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Self-contained SVG heatmap: activated cells bright, inactive dark.
    pub fn to_svg_string(&self, class_names: &[String]) -> String {
        const CELL: usize = 14;
        const LEFT: usize = 110;
        const TOP: usize = 24;
        let m = self.polarities.len();
        let c = self.rows.len();
        let width = LEFT + m * CELL + 10;
        let height = TOP + c * CELL + 10;
        let mut svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
             font-family=\"monospace\" font-size=\"10\">\n"
        );
        svg.push_str(&format!(
            "<text x=\"{LEFT}\" y=\"14\">clause activations (+: votes for, -: votes against)</text>\n"
        ));
        for (ci, name) in class_names.iter().enumerate() {
            let y = TOP + ci * CELL;
            svg.push_str(&format!(
                "<text x=\"4\" y=\"{}\">{}</text>\n",
                y + CELL - 4,
                name
            ));
            for (j, &fired) in self.rows[ci].iter().enumerate() {
                let x = LEFT + j * CELL;
                let fill = if fired == 1 { "#f5e642" } else { "#35193e" };
                let sign = if self.polarities[j].sign() > 0 { '+' } else { '-' };
                svg.push_str(&format!(
                    "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{fill}\" \
                     stroke=\"#777\"><title>class {name} clause {j}{sign}: {fired}</title></rect>\n"
                ));
            }
        }
        svg.push_str("</svg>\n");
        svg
    }
}

/// Evaluates every clause of every class on one input, inference mode.
pub fn activation_map(model: &TsetlinModel, bits: &[u8]) -> Result<ClauseActivationMap> {
    model.check_bits(bits)?;
    let n = model.params().states_per_action;
    let m = model.params().clauses_per_class;
    let mut rows = Vec::with_capacity(model.num_classes());
    for class in 0..model.num_classes() {
        let row = (0..m)
            .map(|j| {
                let clause = model.clause(class, j);
                u8::from(clause.fires(bits, ClauseMode::Inference, n))
            })
            .collect();
        rows.push(row);
    }
    let polarities = (0..m).map(|j| model.clause(0, j).polarity).collect();
    Ok(ClauseActivationMap { rows, polarities })
}

/// One clause rendered as a propositional rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedRule {
    pub class: usize,
    /// Clause index within the class block.
    pub clause_index: usize,
    pub polarity: Polarity,
    /// Training-set firing count used for ranking.
    pub fire_count: u64,
    /// `x12 AND NOT x40` over literal positions, or `TRUE (unconstrained)`.
    pub text: String,
    /// Interval predicates over named raw features, one per literal, when a
    /// binner is available.
    pub predicates: Vec<String>,
    /// True when the clause includes no literals at all.
    pub vacuous: bool,
    pub included_positive: Vec<usize>,
    pub included_negated: Vec<usize>,
}

/// Renders the positive-polarity clauses of `class`, most frequently firing
/// first, `top_k` of them (all of them when `top_k` exceeds the clause
/// count). Pass the fitted binner to translate literals back into feature
/// interval predicates.
pub fn render_rules(
    model: &TsetlinModel,
    class: usize,
    top_k: usize,
    binner: Option<&QuantileBinner>,
) -> Result<Vec<RenderedRule>> {
    if top_k < 1 {
        return Err(Error::Usage("top_k must be >= 1".into()));
    }
    if class >= model.num_classes() {
        return Err(Error::Usage(format!(
            "class {class} out of range for {} classes",
            model.num_classes()
        )));
    }
    let n = model.params().states_per_action;
    let m = model.params().clauses_per_class;
    let range = model.clause_range(class);

    let mut order: Vec<usize> = (0..m / 2).collect(); // positive block comes first
    order.sort_by_key(|&j| std::cmp::Reverse(model.fire_counts()[range.start + j]));
    order.truncate(top_k.min(m / 2));

    let mut rules = Vec::with_capacity(order.len());
    for j in order {
        let clause = model.clause(class, j);
        let (pos, neg) = clause.included_literals(n);
        let vacuous = pos.is_empty() && neg.is_empty();
        if vacuous {
            log::warn!("clause {j} of class {class} includes no literals; rendering as TRUE");
        }
        let text = render_text(&pos, &neg);
        let predicates = match binner {
            Some(b) => literal_predicates(b, &pos, &neg),
            None => Vec::new(),
        };
        rules.push(RenderedRule {
            class,
            clause_index: j,
            polarity: clause.polarity,
            fire_count: model.fire_counts()[range.start + j],
            text,
            predicates,
            vacuous,
            included_positive: pos,
            included_negated: neg,
        });
    }
    Ok(rules)
}

fn render_text(included_positive: &[usize], included_negated: &[usize]) -> String {
    let mut terms: Vec<String> = included_positive.iter().map(|i| format!("x{i}")).collect();
    terms.extend(included_negated.iter().map(|i| format!("NOT x{i}")));
    if terms.is_empty() {
        "TRUE (unconstrained)".to_string()
    } else {
        terms.join(" AND ")
    }
}

/// Maps literal positions back through the binner to interval predicates in
/// the standardized feature scale.
fn literal_predicates(binner: &QuantileBinner, pos: &[usize], neg: &[usize]) -> Vec<String> {
    let locate = |literal: usize| -> Option<(usize, usize)> {
        let mut offset = 0;
        for f in 0..binner.num_features() {
            let width = binner.effective_bins(f);
            if literal < offset + width {
                return Some((f, literal - offset));
            }
            offset += width;
        }
        None
    };
    let describe = |literal: usize, negated: bool| -> String {
        match locate(literal) {
            Some((f, bin)) => {
                let name = &binner.feature_names()[f];
                let interval = binner.bin_interval(f, bin);
                if negated {
                    format!("NOT {name} in bin{bin} {interval}")
                } else {
                    format!("{name} in bin{bin} {interval}")
                }
            }
            None => format!("literal {literal} outside binner range"),
        }
    };
    let mut out: Vec<String> = pos.iter().map(|&l| describe(l, false)).collect();
    out.extend(neg.iter().map(|&l| describe(l, true)));
    out
}

/// Parses rule text produced by [`render_rules`] back into the
/// (included, negated) literal index sets.
pub fn parse_rule_text(text: &str) -> Result<(Vec<usize>, Vec<usize>)> {
    let trimmed = text.trim();
    if trimmed.is_empty() || trimmed.starts_with("TRUE") {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for term in trimmed.split(" AND ") {
        let term = term.trim();
        let (negated, literal) = match term.strip_prefix("NOT ") {
            Some(rest) => (true, rest.trim()),
            None => (false, term),
        };
        let index: usize = literal
            .strip_prefix('x')
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Data(format!("unparsable rule term {term:?}")))?;
        if negated {
            neg.push(index);
        } else {
            pos.push(index);
        }
    }
    Ok((pos, neg))
}

/// `class,vote` CSV of one vote vector.
pub fn votes_csv(votes: &VoteVector, class_names: &[String]) -> String {
    let mut out = String::from("class,vote\n");
    for (c, v) in votes.votes.iter().enumerate() {
        out.push_str(&format!("{},{v}\n", class_names[c]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tm::{BinarizedSample, TmParams, TsetlinModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn trained_toy() -> TsetlinModel {
        let names = (0..4).map(|i| format!("b{i}")).collect();
        let mut model = TsetlinModel::new(
            2,
            names,
            TmParams {
                clauses_per_class: 6,
                threshold: 4,
                specificity: 3.0,
                states_per_action: 24,
            },
            21,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let data: Vec<BinarizedSample> = (0..64)
            .map(|i| {
                let b0 = (i >> 1) & 1;
                let b1 = i & 1;
                BinarizedSample::new(vec![b0 as u8, b1 as u8, ((i >> 2) & 1) as u8, 1], b0 as usize).unwrap()
            })
            .collect();
        model.fit(&data, None, 15, &mut rng).unwrap();
        model
    }

    #[test]
    fn untrained_model_votes_all_zero() {
        let names = (0..3).map(|i| format!("b{i}")).collect();
        let model = TsetlinModel::new(2, names, TmParams::default(), 1).unwrap();
        let votes = class_votes(&model, &[1, 0, 1]).unwrap();
        assert_eq!(votes.votes, vec![0, 0]);
    }

    #[test]
    fn activation_rows_sum_to_votes() {
        let model = trained_toy();
        for bits in [[0, 0, 0, 1], [0, 1, 1, 1], [1, 0, 0, 0], [1, 1, 1, 1]] {
            let map = activation_map(&model, &bits).unwrap();
            let votes = class_votes(&model, &bits).unwrap();
            for c in 0..model.num_classes() {
                assert_eq!(map.signed_row_sum(c), votes.votes[c]);
            }
        }
    }

    #[test]
    fn all_zero_row_means_zero_vote() {
        let names = (0..2).map(|i| format!("b{i}")).collect();
        let model = TsetlinModel::new(2, names, TmParams::default(), 2).unwrap();
        let map = activation_map(&model, &[1, 0]).unwrap();
        for c in 0..2 {
            assert!(map.rows[c].iter().all(|&v| v == 0));
            assert_eq!(map.signed_row_sum(c), 0);
        }
    }

    #[test]
    fn rule_text_round_trips() {
        let model = trained_toy();
        let rules = render_rules(&model, 0, 3, None).unwrap();
        assert!(!rules.is_empty());
        for rule in rules {
            let (pos, neg) = parse_rule_text(&rule.text).unwrap();
            assert_eq!(pos, rule.included_positive);
            assert_eq!(neg, rule.included_negated);
        }
    }

    #[test]
    fn vacuous_clause_renders_true() {
        let names = (0..2).map(|i| format!("b{i}")).collect();
        let model = TsetlinModel::new(2, names, TmParams::default(), 2).unwrap();
        let rules = render_rules(&model, 0, 1, None).unwrap();
        assert_eq!(rules[0].text, "TRUE (unconstrained)");
        assert!(rules[0].vacuous);
        let (pos, neg) = parse_rule_text(&rules[0].text).unwrap();
        assert!(pos.is_empty() && neg.is_empty());
    }

    #[test]
    fn top_k_clamps_to_positive_clause_count() {
        let model = trained_toy();
        let rules = render_rules(&model, 1, 999, None).unwrap();
        assert_eq!(rules.len(), 3); // m/2 positive clauses
        assert!(render_rules(&model, 1, 0, None).is_err());
    }

    #[test]
    fn exports_are_deterministic() {
        let model = trained_toy();
        let bits = [1, 0, 1, 1];
        let map1 = activation_map(&model, &bits).unwrap();
        let map2 = activation_map(&model, &bits).unwrap();
        let names = vec!["Benign".to_string(), "DoS".to_string()];
        assert_eq!(map1.to_csv_string(&names), map2.to_csv_string(&names));
        assert_eq!(map1.to_svg_string(&names), map2.to_svg_string(&names));
        let votes = class_votes(&model, &bits).unwrap();
        assert!(votes_csv(&votes, &names).starts_with("class,vote\n"));
    }
}
