use std::collections::HashMap;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image_core::{
    check_survey_pair, read_archive, stack_batch, Augmentation, Cutout, SurveyId, SurveySpec,
};
use crate::synthetic::{Dataset, Split};
use crate::tensor::Tensor;

/// Archive contents sorted into the roles training needs.
#[derive(Clone, Debug)]
pub struct TrainingData {
    pub survey_x: SurveySpec,
    pub survey_y: SurveySpec,
    /// Training pairs `(x, y)` sharing a pairing key.
    pub pairs: Vec<(Cutout, Cutout)>,
    /// Held-out pairs, never used for training.
    pub test_pairs: Vec<(Cutout, Cutout)>,
    pub unpaired_x: Vec<Cutout>,
    pub unpaired_y: Vec<Cutout>,
}

impl TrainingData {
    pub fn from_cutouts(
        survey_x: SurveySpec,
        survey_y: SurveySpec,
        x: Vec<Cutout>,
        y: Vec<Cutout>,
    ) -> Result<Self> {
        check_survey_pair(&survey_x, &survey_y)?;
        for (c, s, d) in x
            .iter()
            .map(|c| (c, &survey_x, SurveyId::X))
            .chain(y.iter().map(|c| (c, &survey_y, SurveyId::Y)))
        {
            s.check_cutout(c)?;
            if c.survey() != d {
                return Err(Error::ContractViolation(format!(
                    "{} is tagged {:?} inside the {d:?} archive",
                    c.object_id(),
                    c.survey()
                )));
            }
        }
        let mut y_by_key: HashMap<String, Cutout> = HashMap::new();
        let mut unpaired_y = Vec::new();
        for c in y {
            match c.pairing_key() {
                Some(k) => {
                    y_by_key.insert(k.to_owned(), c);
                }
                None => unpaired_y.push(c),
            }
        }
        let (mut pairs, mut test_pairs, mut unpaired_x) = (Vec::new(), Vec::new(), Vec::new());
        for c in x {
            let Some(key) = c.pairing_key().map(str::to_owned) else {
                unpaired_x.push(c);
                continue;
            };
            let partner = y_by_key.remove(&key).ok_or_else(|| {
                Error::ContractViolation(format!("pairing key {key} has no Y counterpart"))
            })?;
            match Split::of(&c) {
                Split::PairedTest => test_pairs.push((c, partner)),
                _ => pairs.push((c, partner)),
            }
        }
        if let Some(key) = y_by_key.keys().min() {
            return Err(Error::ContractViolation(format!("pairing key {key} has no X counterpart")));
        }
        Ok(Self {
            survey_x,
            survey_y,
            pairs,
            test_pairs,
            unpaired_x,
            unpaired_y,
        })
    }

    pub fn from_dataset(d: &Dataset) -> Result<Self> {
        Self::from_cutouts(
            d.manifest_x.survey.clone(),
            d.manifest_y.survey.clone(),
            d.x.clone(),
            d.y.clone(),
        )
    }

    pub fn from_archives(x_path: &Path, y_path: &Path) -> Result<Self> {
        let (x, mx) = read_archive(x_path)?;
        let (y, my) = read_archive(y_path)?;
        if mx.domain != SurveyId::X || my.domain != SurveyId::Y {
            return Err(Error::ContractViolation(format!(
                "archives hold domains {:?} and {:?}, expected X and Y",
                mx.domain, my.domain
            )));
        }
        Self::from_cutouts(mx.survey, my.survey, x, y)
    }

    /// Every training image of one domain: unpaired plus paired-train.
    pub fn pooled(&self, domain: SurveyId) -> Vec<&Cutout> {
        match domain {
            SurveyId::X => self
                .unpaired_x
                .iter()
                .chain(self.pairs.iter().map(|(x, _)| x))
                .collect(),
            SurveyId::Y => self
                .unpaired_y
                .iter()
                .chain(self.pairs.iter().map(|(_, y)| y))
                .collect(),
        }
    }

    pub fn unpaired(&self, domain: SurveyId) -> Vec<&Cutout> {
        match domain {
            SurveyId::X => self.unpaired_x.iter().collect(),
            SurveyId::Y => self.unpaired_y.iter().collect(),
        }
    }
}

pub(crate) fn random_augmentation(rng: &mut ChaCha8Rng, enabled: bool) -> Augmentation {
    if !enabled {
        return Augmentation::new(false, false, 0);
    }
    Augmentation::new(rng.random(), rng.random(), rng.random_range(0..4u8))
}

/// Draw `n` images with replacement, each with its own random dihedral
/// transform.
pub(crate) fn sample_batch(
    rng: &mut ChaCha8Rng,
    pool: &[&Cutout],
    n: usize,
    augment: bool,
) -> Result<Tensor> {
    if pool.is_empty() {
        return Err(Error::EmptyInput("no training images for a batch".into()));
    }
    let picked: Vec<Cutout> = (0..n)
        .map(|_| {
            let c = pool[rng.random_range(0..pool.len())];
            random_augmentation(rng, augment).apply(c)
        })
        .collect();
    Ok(stack_batch(&picked))
}

/// Draw `n` pairs; both views of a pair receive the same transform.
pub(crate) fn sample_pairs(
    rng: &mut ChaCha8Rng,
    pairs: &[(Cutout, Cutout)],
    n: usize,
    augment: bool,
) -> Result<(Tensor, Tensor)> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("no training pairs for a batch".into()));
    }
    let (mut xs, mut ys) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let (x, y) = &pairs[rng.random_range(0..pairs.len())];
        let aug = random_augmentation(rng, augment);
        xs.push(aug.apply(x));
        ys.push(aug.apply(y));
    }
    Ok((stack_batch(&xs), stack_batch(&ys)))
}
