use crate::error::{Error, Result};
use crate::grid::ImageGrid;

/// Images with class labels in `0..class_count`.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    images: Vec<ImageGrid>,
    labels: Vec<usize>,
    class_count: usize,
}

impl LabeledDataset {
    /// `class_count` defaults to `max(label) + 1` when `None`.
    pub fn new(images: Vec<ImageGrid>, labels: Vec<usize>, class_count: Option<usize>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::CountMismatch {
                images: images.len(),
                labels: labels.len(),
            });
        }
        let needed = labels.iter().map(|&l| l + 1).max().unwrap_or(0);
        let class_count = class_count.unwrap_or(needed).max(1);
        if needed > class_count {
            return Err(Error::InvalidConfig(format!(
                "label {} out of range for {class_count} classes",
                needed - 1
            )));
        }
        Ok(Self {
            images,
            labels,
            class_count,
        })
    }

    pub fn images(&self) -> &[ImageGrid] {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Keeps the first `n` items.
    pub fn truncate(&mut self, n: usize) {
        self.images.truncate(n);
        self.labels.truncate(n);
    }

    pub fn into_parts(self) -> (Vec<ImageGrid>, Vec<usize>, usize) {
        (self.images, self.labels, self.class_count)
    }
}
