use super::LabeledFeatures;
use crate::error::{mismatch, Error, Result};

/// A trained model mapping one feature vector to a class id.
pub trait Classifier {
    fn class_count(&self) -> usize;
    fn dim(&self) -> usize;
    fn predict(&self, x: &[f64]) -> Result<usize>;
}

/// Accuracy plus a confusion matrix indexed `[true][predicted]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub confusion: Vec<Vec<usize>>,
}

pub fn evaluate(model: &dyn Classifier, data: &LabeledFeatures) -> Result<EvalReport> {
    if data.class_count > model.class_count() {
        return Err(Error::InvalidConfig(format!(
            "test set has {} classes, model knows {}",
            data.class_count,
            model.class_count()
        )));
    }
    let preds = data
        .features
        .iter()
        .map(|x| model.predict(x))
        .collect::<Result<Vec<_>>>()?;
    evaluate_predictions(&preds, &data.labels, model.class_count())
}

pub fn evaluate_predictions(predictions: &[usize], labels: &[usize], class_count: usize) -> Result<EvalReport> {
    if predictions.len() != labels.len() {
        return Err(mismatch(
            format!("{} predictions", labels.len()),
            format!("{} predictions", predictions.len()),
        ));
    }
    if predictions.is_empty() {
        return Err(Error::Empty("nothing to evaluate".into()));
    }
    let mut confusion = vec![vec![0usize; class_count]; class_count];
    let mut correct = 0;
    for (&p, &l) in predictions.iter().zip(labels) {
        if p >= class_count || l >= class_count {
            return Err(Error::InvalidConfig(format!(
                "class id {} out of range for {class_count} classes",
                p.max(l)
            )));
        }
        confusion[l][p] += 1;
        correct += (p == l) as usize;
    }
    Ok(EvalReport {
        accuracy: correct as f64 / labels.len() as f64,
        correct,
        total: labels.len(),
        confusion,
    })
}
