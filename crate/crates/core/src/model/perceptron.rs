//! Multiclass averaged perceptron over hashed features.

use fnv::FnvHashMap;

use super::features::FeatureVector;

/// Scores candidate actions, identified by their index in an alphabet.
pub trait Scorer {
    fn n_classes(&self) -> usize;

    fn score(&self, features: &FeatureVector, class: usize) -> f32;

    /// Scores for every class. Implementations may override this for speed.
    fn scores(&self, features: &FeatureVector) -> Vec<f32> {
        (0..self.n_classes()).map(|c| self.score(features, c)).collect()
    }
}

pub trait TrainableScorer: Scorer {
    fn update(&mut self, features: &FeatureVector, gold: usize, predicted: usize);
}

/// Highest-scoring candidate; the earliest candidate wins ties.
pub fn argmax(scores: &[f32], candidates: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f32)> = None;
    for &c in candidates {
        match best {
            Some((_, s)) if scores[c] <= s => {}
            _ => best = Some((c, scores[c])),
        }
    }
    best.map(|(c, _)| c)
}

#[derive(Debug, Clone, Copy, Default)]
struct Cell {
    weight: f32,
    total: f64,
    stamp: u64,
}

/// Weights with lazily accumulated running sums for averaging.
#[derive(Debug, Clone)]
pub struct AveragedPerceptron {
    n_classes: usize,
    rows: FnvHashMap<u32, Vec<Cell>>,
    instances: u64,
}

impl AveragedPerceptron {
    pub fn new(n_classes: usize) -> Self {
        AveragedPerceptron {
            n_classes,
            rows: FnvHashMap::default(),
            instances: 0,
        }
    }

    /// Marks the end of one training instance.
    pub fn tick(&mut self) {
        self.instances += 1;
    }

    pub fn instances(&self) -> u64 {
        self.instances
    }

    fn bump(&mut self, feature: u32, class: usize, delta: f32) {
        let now = self.instances;
        let n = self.n_classes;
        let cell = &mut self.rows.entry(feature).or_insert_with(|| vec![Cell::default(); n])[class];
        cell.total += cell.weight as f64 * (now - cell.stamp) as f64;
        cell.stamp = now;
        cell.weight += delta;
    }

    /// Weights averaged over all instances seen so far.
    pub fn averaged(&self) -> LinearWeights {
        let now = self.instances.max(1);
        let rows = self
            .rows
            .iter()
            .map(|(&f, cells)| {
                let row = cells
                    .iter()
                    .map(|c| {
                        let total = c.total + c.weight as f64 * (self.instances - c.stamp) as f64;
                        (total / now as f64) as f32
                    })
                    .collect();
                (f, row)
            })
            .collect();
        LinearWeights {
            n_classes: self.n_classes,
            rows,
        }
    }
}

impl Scorer for AveragedPerceptron {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn score(&self, features: &FeatureVector, class: usize) -> f32 {
        features
            .ids()
            .iter()
            .filter_map(|f| self.rows.get(f))
            .map(|row| row[class].weight)
            .sum()
    }

    fn scores(&self, features: &FeatureVector) -> Vec<f32> {
        let mut out = vec![0.0; self.n_classes];
        for row in features.ids().iter().filter_map(|f| self.rows.get(f)) {
            for (o, c) in out.iter_mut().zip(row) {
                *o += c.weight;
            }
        }
        out
    }
}

impl TrainableScorer for AveragedPerceptron {
    fn update(&mut self, features: &FeatureVector, gold: usize, predicted: usize) {
        if gold == predicted {
            return;
        }
        for &f in features.ids() {
            self.bump(f, gold, 1.0);
            self.bump(f, predicted, -1.0);
        }
    }
}

/// Frozen weights: one row of per-class weights per feature id.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearWeights {
    pub n_classes: usize,
    pub rows: FnvHashMap<u32, Vec<f32>>,
}

impl LinearWeights {
    pub fn zeros(n_classes: usize) -> Self {
        LinearWeights {
            n_classes,
            rows: FnvHashMap::default(),
        }
    }
}

impl Scorer for LinearWeights {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn score(&self, features: &FeatureVector, class: usize) -> f32 {
        features
            .ids()
            .iter()
            .filter_map(|f| self.rows.get(f))
            .map(|row| row[class])
            .sum()
    }

    fn scores(&self, features: &FeatureVector) -> Vec<f32> {
        let mut out = vec![0.0; self.n_classes];
        for row in features.ids().iter().filter_map(|f| self.rows.get(f)) {
            for (o, w) in out.iter_mut().zip(row) {
                *o += w;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(names: &[&str]) -> FeatureVector {
        FeatureVector::from_strings(names)
    }

    #[test]
    fn argmax_prefers_first_on_ties() {
        assert_eq!(argmax(&[0.0, 0.0, 0.0], &[2, 1]), Some(2));
        assert_eq!(argmax(&[0.0, 1.0, 1.0], &[0, 1, 2]), Some(1));
        assert_eq!(argmax(&[5.0], &[]), None);
    }

    #[test]
    fn learns_separable_problem() {
        let a = fv(&["x=1"]);
        let b = fv(&["x=2"]);
        let mut p = AveragedPerceptron::new(2);
        for _ in 0..5 {
            for (f, gold) in [(&a, 0), (&b, 1)] {
                let guess = argmax(&p.scores(f), &[0, 1]).unwrap();
                p.update(f, gold, guess);
                p.tick();
            }
        }
        let w = p.averaged();
        assert_eq!(argmax(&w.scores(&a), &[0, 1]), Some(0));
        assert_eq!(argmax(&w.scores(&b), &[0, 1]), Some(1));
    }

    #[test]
    fn averaging_matches_eager_sum() {
        // one update at instance 0, then three more instances
        let f = fv(&["x=1"]);
        let mut p = AveragedPerceptron::new(2);
        p.update(&f, 0, 1);
        for _ in 0..4 {
            p.tick();
        }
        let w = p.averaged();
        let row = &w.rows[&f.ids()[0]];
        assert_eq!(row, &vec![1.0, -1.0]);
        p.update(&f, 1, 0);
        for _ in 0..4 {
            p.tick();
        }
        // weights 1 for 4 instances then 0 for 4 instances
        let row = p.averaged().rows[&f.ids()[0]].clone();
        assert!((row[0] - 0.5).abs() < 1e-6 && (row[1] + 0.5).abs() < 1e-6, "{row:?}");
    }

    #[test]
    fn default_scores_agree_with_fast_path() {
        let f = fv(&["x=1", "y=2"]);
        let mut p = AveragedPerceptron::new(3);
        p.update(&f, 2, 0);
        let slow: Vec<f32> = (0..3).map(|c| p.score(&f, c)).collect();
        assert_eq!(slow, p.scores(&f));
    }
}
