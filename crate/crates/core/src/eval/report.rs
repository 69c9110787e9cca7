use serde::Serialize;

use super::Question;
use crate::error::{Error, Result};
use crate::model::{argmax_first, Predictor};
use crate::tensor::softmax;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuestionOutcome {
    pub id: String,
    /// 0-based pick; `None` when the question could not be answered.
    pub choice: Option<usize>,
    pub gold: usize,
    pub scores: Vec<f64>,
    pub correct: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub total: usize,
    pub answered: usize,
    pub unsupported: usize,
    pub correct: usize,
    /// `correct / total`; unanswered questions count as wrong.
    pub accuracy: f64,
    pub members: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub member_accuracies: Vec<f64>,
    pub records: Vec<QuestionOutcome>,
}

impl EvalReport {
    fn from_outcomes(records: Vec<QuestionOutcome>, members: usize) -> Self {
        let total = records.len();
        let answered = records.iter().filter(|r| r.choice.is_some()).count();
        let correct = records.iter().filter(|r| r.correct).count();
        EvalReport {
            total,
            answered,
            unsupported: total - answered,
            correct,
            accuracy: if total == 0 {
                0.0
            } else {
                correct as f64 / total as f64
            },
            members,
            member_accuracies: Vec::new(),
            records,
        }
    }

    /// Accuracy as a percentage with one decimal, e.g. `75.0%`.
    pub fn accuracy_percent(&self) -> String {
        format_percent(self.accuracy)
    }

    pub fn summary_line(&self) -> String {
        format!(
            "accuracy {} ({}/{} correct, {} unsupported)",
            self.accuracy_percent(),
            self.correct,
            self.total,
            self.unsupported
        )
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }
}

pub fn format_percent(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

fn outcome(q: &Question, result: Result<(usize, Vec<f64>)>) -> QuestionOutcome {
    match result {
        Ok((choice, scores)) => QuestionOutcome {
            id: q.id.clone(),
            choice: Some(choice),
            gold: q.gold,
            scores,
            correct: choice == q.gold,
            error: None,
        },
        Err(e) => QuestionOutcome {
            id: q.id.clone(),
            choice: None,
            gold: q.gold,
            scores: Vec::new(),
            correct: false,
            error: Some(e.to_string()),
        },
    }
}

/// Scores every question; failures are recorded, never fatal.
pub fn evaluate_model<P: Predictor + ?Sized>(model: &P, questions: &[Question]) -> EvalReport {
    let records = questions
        .iter()
        .map(|q| {
            let r = model.predict_question(q).and_then(|p| {
                if p.scores.len() == q.candidates.len() {
                    Ok((p.choice, p.scores))
                } else {
                    Err(Error::data(
                        q.id.clone(),
                        "scorer returned the wrong number of scores",
                    ))
                }
            });
            outcome(q, r)
        })
        .collect();
    EvalReport::from_outcomes(records, 1)
}

/// Averages each member's softmax-normalized candidate scores.
pub fn evaluate_ensemble<P: Predictor>(models: &[P], questions: &[Question]) -> Result<EvalReport> {
    let first = models
        .first()
        .ok_or_else(|| Error::Config("an ensemble needs at least one model".into()))?;
    if let Some(m) = models.iter().find(|m| m.kind() != first.kind()) {
        return Err(Error::Config(format!(
            "ensemble mixes {} and {} models",
            first.kind(),
            m.kind()
        )));
    }
    let records = questions
        .iter()
        .map(|q| {
            let r = (|| {
                let mut mean = vec![0.0; q.candidates.len()];
                for m in models {
                    let p = m.predict_question(q)?;
                    if p.scores.len() != mean.len() {
                        return Err(Error::data(
                            q.id.clone(),
                            "scorer returned the wrong number of scores",
                        ));
                    }
                    for (acc, v) in mean.iter_mut().zip(softmax(&p.scores)) {
                        *acc += v / models.len() as f64;
                    }
                }
                Ok((argmax_first(&mean), mean))
            })();
            outcome(q, r)
        })
        .collect();
    let mut report = EvalReport::from_outcomes(records, models.len());
    report.member_accuracies = models
        .iter()
        .map(|m| evaluate_model(m, questions).accuracy)
        .collect();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelKind, Prediction};

    /// Fixed per-candidate scores; fails on ids starting with `x`.
    struct Stub {
        kind: ModelKind,
        scores: fn(&Question) -> Vec<f64>,
    }

    impl Predictor for Stub {
        fn kind(&self) -> ModelKind {
            self.kind
        }

        fn predict_question(&self, q: &Question) -> Result<Prediction> {
            if q.id.starts_with('x') {
                return Err(Error::Unsupported {
                    id: q.id.clone(),
                    msg: "stub".into(),
                });
            }
            Ok(Prediction::from_scores((self.scores)(q)))
        }
    }

    fn q(id: &str, gold: usize) -> Question {
        let toks = "a b c d he e".split(' ').map(String::from).collect();
        Question::new(id, toks, 5, &[(1, 1), (2, 3), (4, 4)], gold).unwrap()
    }

    fn first(q: &Question) -> Vec<f64> {
        let mut v = vec![0.0; q.candidates.len()];
        v[0] = 1.0;
        v
    }

    fn gold(q: &Question) -> Vec<f64> {
        let mut v = vec![0.0; q.candidates.len()];
        v[q.gold] = 5.0;
        v
    }

    #[test]
    fn first_candidate_stub_matches_gold_fraction() {
        let qs = vec![q("a", 0), q("b", 1), q("c", 0), q("d", 2)];
        let r = evaluate_model(
            &Stub {
                kind: ModelKind::Udssm1,
                scores: first,
            },
            &qs,
        );
        assert_eq!(r.correct, 2);
        assert_eq!(r.accuracy, 0.5);
        let r = evaluate_model(
            &Stub {
                kind: ModelKind::Udssm1,
                scores: gold,
            },
            &qs,
        );
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn unsupported_counts_as_wrong() {
        let qs = vec![q("a", 0), q("x1", 0), q("b", 1)];
        let r = evaluate_model(
            &Stub {
                kind: ModelKind::Udssm1,
                scores: first,
            },
            &qs,
        );
        assert_eq!(
            (r.total, r.answered, r.unsupported, r.correct),
            (3, 2, 1, 1)
        );
        assert!((r.accuracy - 1.0 / 3.0).abs() < 1e-15);
        assert!(r.records[1].error.as_deref().unwrap().contains("x1"));
    }

    #[test]
    fn percent_formatting() {
        let qs: Vec<_> = (0..60)
            .map(|k| q(&format!("q{k}"), usize::from(k >= 45)))
            .collect();
        let r = evaluate_model(
            &Stub {
                kind: ModelKind::Udssm2,
                scores: first,
            },
            &qs,
        );
        assert_eq!(r.accuracy_percent(), "75.0%");
    }

    #[test]
    fn ensemble_of_one_and_of_copies() {
        let qs = vec![q("a", 0), q("b", 1), q("x", 2)];
        let single = evaluate_model(
            &Stub {
                kind: ModelKind::Udssm1,
                scores: first,
            },
            &qs,
        );
        let ens = evaluate_ensemble(
            &[Stub {
                kind: ModelKind::Udssm1,
                scores: first,
            }],
            &qs,
        )
        .unwrap();
        let picks = |r: &EvalReport| r.records.iter().map(|o| o.choice).collect::<Vec<_>>();
        assert_eq!(picks(&single), picks(&ens));
        assert_eq!(ens.members, 1);
        assert_eq!(ens.member_accuracies, vec![single.accuracy]);
        let three: Vec<_> = (0..3)
            .map(|_| Stub {
                kind: ModelKind::Udssm1,
                scores: first,
            })
            .collect();
        assert_eq!(
            picks(&evaluate_ensemble(&three, &qs).unwrap()),
            picks(&single)
        );
        for o in &ens.records {
            if o.choice.is_some() {
                assert!((o.scores.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn opposite_members_fall_to_tie_rule() {
        fn last(q: &Question) -> Vec<f64> {
            let mut v = vec![0.0; q.candidates.len()];
            v[q.candidates.len() - 1] = 1.0;
            v
        }
        let qs = vec![q("a", 2)];
        let models = [
            Stub {
                kind: ModelKind::Udssm2,
                scores: first,
            },
            Stub {
                kind: ModelKind::Udssm2,
                scores: last,
            },
        ];
        let r = evaluate_ensemble(&models, &qs).unwrap();
        assert_eq!(r.records[0].choice, Some(0));
    }

    #[test]
    fn mixed_kinds_rejected() {
        let models = [
            Stub {
                kind: ModelKind::Udssm1,
                scores: first,
            },
            Stub {
                kind: ModelKind::Udssm2,
                scores: first,
            },
        ];
        assert!(matches!(
            evaluate_ensemble(&models, &[q("a", 0)]),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            evaluate_ensemble::<Stub>(&[], &[q("a", 0)]),
            Err(Error::Config(_))
        ));
    }
}
