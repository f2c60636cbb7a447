//! Ridge regression with an unpenalized intercept.
//!
//! Features and targets are centered, so the intercept is recovered as
//! `mean(y) - dot(beta, mean(x))` and only the slope coefficients carry the
//! L2 penalty. The penalized normal equations are solved in whichever space
//! is smaller: the d-dimensional primal `(Xc'Xc + lambda I) beta = Xc'y`
//! when d <= n, otherwise the n-dimensional dual
//! `beta = Xc' (Xc Xc' + lambda I)^-1 yc`, which matters for the 2048-wide
//! neural vectors trained on a handful of commits.

use super::PredictError;

#[derive(Debug, Clone)]
pub struct RidgeModel {
    beta: Vec<f64>,
    intercept: f64,
    positive_floor: f64,
}

impl RidgeModel {
    pub fn fit(
        lambda: f64,
        positive_floor: f64,
        features: &[Vec<f64>],
        targets: &[f64],
    ) -> Result<Self, PredictError> {
        if features.is_empty() {
            return Err(PredictError::EmptyTrainingSet);
        }
        if lambda < 0.0 {
            return Err(PredictError::InvalidArgument(
                "ridge lambda must be non-negative".to_string(),
            ));
        }
        let n = features.len();
        let d = features[0].len();

        let mut x_mean = vec![0.0; d];
        for row in features {
            for (m, v) in x_mean.iter_mut().zip(row.iter()) {
                *m += v;
            }
        }
        for m in &mut x_mean {
            *m /= n as f64;
        }
        let y_mean = targets.iter().sum::<f64>() / n as f64;

        let centered: Vec<Vec<f64>> = features
            .iter()
            .map(|row| row.iter().zip(x_mean.iter()).map(|(v, m)| v - m).collect())
            .collect();
        let y_centered: Vec<f64> = targets.iter().map(|t| t - y_mean).collect();

        let beta = if d <= n {
            // primal: (Xc'Xc + lambda I) beta = Xc'yc
            let mut a = vec![vec![0.0; d]; d];
            for row in &centered {
                for i in 0..d {
                    for j in i..d {
                        a[i][j] += row[i] * row[j];
                    }
                }
            }
            for i in 0..d {
                for j in 0..i {
                    a[i][j] = a[j][i];
                }
                a[i][i] += lambda;
            }
            let mut b = vec![0.0; d];
            for (row, &yc) in centered.iter().zip(y_centered.iter()) {
                for (bi, v) in b.iter_mut().zip(row.iter()) {
                    *bi += v * yc;
                }
            }
            cholesky_solve(a, &b)?
        } else {
            // dual: alpha = (Xc Xc' + lambda I)^-1 yc, beta = Xc' alpha
            let mut k = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in i..n {
                    let dot: f64 = centered[i]
                        .iter()
                        .zip(centered[j].iter())
                        .map(|(a, b)| a * b)
                        .sum();
                    k[i][j] = dot;
                    k[j][i] = dot;
                }
                k[i][i] += lambda;
            }
            let alpha = cholesky_solve(k, &y_centered)?;
            let mut beta = vec![0.0; d];
            for (row, &a) in centered.iter().zip(alpha.iter()) {
                for (bi, v) in beta.iter_mut().zip(row.iter()) {
                    *bi += a * v;
                }
            }
            beta
        };

        let intercept = y_mean - beta.iter().zip(x_mean.iter()).map(|(b, m)| b * m).sum::<f64>();
        Ok(RidgeModel {
            beta,
            intercept,
            positive_floor,
        })
    }

    pub fn predict(&self, query: &[f64]) -> Result<f64, PredictError> {
        if query.len() != self.beta.len() {
            return Err(PredictError::DimensionMismatch {
                expected: self.beta.len(),
                got: query.len(),
            });
        }
        let raw = self.intercept
            + self
                .beta
                .iter()
                .zip(query.iter())
                .map(|(b, x)| b * x)
                .sum::<f64>();
        Ok(raw.max(self.positive_floor))
    }

    pub fn coefficients(&self) -> (&[f64], f64) {
        (&self.beta, self.intercept)
    }
}

/// Solves `A x = b` for symmetric positive-definite `A`. A pivot at or
/// below the rounding noise of the matrix scale means the system is
/// singular, which is how a lambda of zero on a rank-deficient design
/// surfaces.
fn cholesky_solve(mut a: Vec<Vec<f64>>, b: &[f64]) -> Result<Vec<f64>, PredictError> {
    let n = b.len();
    let scale = (0..n).map(|i| a[i][i]).fold(0.0f64, f64::max);
    let tolerance = (scale * 1e-12).max(1e-300);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= a[i][k] * a[j][k];
            }
            if i == j {
                if sum <= tolerance || !sum.is_finite() {
                    return Err(PredictError::SingularSystem);
                }
                a[i][i] = sum.sqrt();
            } else {
                a[i][j] = sum / a[j][j];
            }
        }
    }
    // forward substitution: L z = b
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= a[i][k] * z[k];
        }
        z[i] = sum / a[i][i];
    }
    // back substitution: L' x = z
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = z[i];
        for k in (i + 1)..n {
            sum -= a[k][i] * x[k];
        }
        x[i] = sum / a[i][i];
    }
    Ok(x)
}
