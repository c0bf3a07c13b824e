use serde::{Deserialize, Serialize};

use super::AnalyticsError;

/// One respondent's answers to the ten SUS statements, in questionnaire order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct SusResponse([u8; 10]);

impl SusResponse {
    pub fn new(values: &[i64]) -> Result<Self, AnalyticsError> {
        if values.len() != 10 {
            return Err(AnalyticsError::WrongLength(values.len()));
        }
        let mut items = [0u8; 10];
        for (i, &v) in values.iter().enumerate() {
            if !(1..=5).contains(&v) {
                return Err(AnalyticsError::OutOfRange { item: i + 1, value: v });
            }
            items[i] = v as u8;
        }
        Ok(Self(items))
    }

    pub fn items(&self) -> [u8; 10] {
        self.0
    }

    /// Every answer x replaced by 6 - x.
    pub fn mirrored(&self) -> Self {
        Self(self.0.map(|x| 6 - x))
    }
}

impl TryFrom<Vec<i64>> for SusResponse {
    type Error = AnalyticsError;

    fn try_from(values: Vec<i64>) -> Result<Self, Self::Error> {
        Self::new(&values)
    }
}

impl From<SusResponse> for Vec<i64> {
    fn from(r: SusResponse) -> Self {
        r.0.iter().map(|&x| x as i64).collect()
    }
}

/// Standard SUS score: odd items give `x - 1`, even items `5 - x`, total times 2.5.
pub fn sus_score(response: &SusResponse) -> f64 {
    let raw: u32 = response
        .0
        .iter()
        .enumerate()
        .map(|(i, &x)| if i % 2 == 0 { x as u32 - 1 } else { 5 - x as u32 })
        .sum();
    raw as f64 * 2.5
}

pub fn sus_mean(responses: &[SusResponse]) -> Result<f64, AnalyticsError> {
    if responses.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    Ok(responses.iter().map(sus_score).sum::<f64>() / responses.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: [i64; 10]) -> SusResponse {
        SusResponse::new(&v).unwrap()
    }

    #[test]
    fn canonical_scores() {
        assert_eq!(sus_score(&r([5, 1, 5, 1, 5, 1, 5, 1, 5, 1])), 100.0);
        assert_eq!(sus_score(&r([3; 10])), 50.0);
        assert_eq!(sus_score(&r([4, 2, 4, 2, 4, 2, 4, 2, 4, 2])), 75.0);
        assert_eq!(sus_score(&r([1, 5, 1, 5, 1, 5, 1, 5, 1, 5])), 0.0);
    }

    #[test]
    fn means() {
        assert_eq!(sus_mean(&[r([5, 1, 5, 1, 5, 1, 5, 1, 5, 1])]).unwrap(), 100.0);
        assert_eq!(sus_mean(&[r([3; 10]), r([5, 1, 5, 1, 5, 1, 5, 1, 5, 1])]).unwrap(), 75.0);
        assert_eq!(sus_mean(&[]), Err(AnalyticsError::EmptyInput));
    }

    /// Ten respondents; each score is checked against an item tally done by hand
    /// (odd items x - 1, even items 5 - x).
    #[test]
    fn cohort_mean_matches_hand_tally() {
        let rows = [
            [5, 2, 5, 1, 4, 2, 5, 2, 4, 2], // 4+3+4+4+3+3+4+3+3+3 = 34 -> 85
            [4, 2, 4, 2, 4, 2, 4, 2, 4, 2], // 30 -> 75
            [5, 1, 5, 1, 5, 1, 5, 1, 5, 1], // 40 -> 100
            [4, 1, 5, 2, 4, 2, 5, 1, 4, 2], // 3+4+4+3+3+3+4+4+3+3 = 34 -> 85
            [3, 3, 3, 3, 3, 3, 3, 3, 3, 3], // 20 -> 50
            [5, 1, 4, 1, 5, 2, 4, 1, 5, 1], // 4+4+3+4+4+3+3+4+4+4 = 37 -> 92.5
            [4, 2, 5, 2, 4, 1, 4, 2, 4, 2], // 3+3+4+3+3+4+3+3+3+3 = 32 -> 80
            [5, 2, 4, 1, 4, 2, 5, 1, 4, 1], // 4+3+3+4+3+3+4+4+3+4 = 35 -> 87.5
            [4, 1, 4, 1, 5, 1, 4, 2, 5, 2], // 3+4+3+4+4+4+3+3+4+3 = 35 -> 87.5
            [5, 1, 5, 2, 5, 1, 4, 1, 4, 1], // 4+4+4+3+4+4+3+4+3+4 = 37 -> 92.5
        ];
        let responses: Vec<_> = rows.into_iter().map(r).collect();
        let expected = [85.0, 75.0, 100.0, 85.0, 50.0, 92.5, 80.0, 87.5, 87.5, 92.5];
        for (resp, want) in responses.iter().zip(expected) {
            assert_eq!(sus_score(resp), want);
        }
        // 835 / 10
        assert_eq!(sus_mean(&responses).unwrap(), 83.5);
    }

    #[test]
    fn validation() {
        assert_eq!(SusResponse::new(&[3; 9]), Err(AnalyticsError::WrongLength(9)));
        assert_eq!(
            SusResponse::new(&[3, 3, 3, 6, 3, 3, 3, 3, 3, 3]),
            Err(AnalyticsError::OutOfRange { item: 4, value: 6 })
        );
        assert!(serde_json::from_str::<SusResponse>("[1,2,3]").is_err());
    }

    #[test]
    fn mirror_sums_to_hundred() {
        let resp = r([1, 2, 3, 4, 5, 1, 2, 3, 4, 5]);
        assert_eq!(sus_score(&resp) + sus_score(&resp.mirrored()), 100.0);
    }
}
