//! Scripted cohorts run through the full selection, grading and profile pipeline.

use std::collections::BTreeMap;

use chrono::{DateTime, TimeDelta, Utc};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use assess_core::analytics::{engagement_counters, EngagementCounters, RunEvent};
use assess_core::grading::overall_percent;
use assess_core::synth::{correct_response, wrong_response};
use assess_core::{
    select, Answer, AssessmentSession, Difficulty, EducationLevel, KnowledgeLevel, Learner, LearnerProfile,
    QuestionBank, SelectionCriteria, TopicId,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CorrectProbability {
    Uniform(f64),
    Banded { easy: f64, medium: f64, difficult: f64 },
}

/// How a simulated learner answers: each keyed item is answered fully
/// correctly with the probability for its difficulty, fully wrongly otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationPolicy {
    pub correct_probability: CorrectProbability,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SimulationPolicy {
    pub fn uniform(p: f64) -> Self {
        SimulationPolicy { correct_probability: CorrectProbability::Uniform(p), seed: None }
    }

    pub fn probability(&self, difficulty: Difficulty) -> f64 {
        match self.correct_probability {
            CorrectProbability::Uniform(p) => p,
            CorrectProbability::Banded { easy, medium, difficult } => match difficulty {
                Difficulty::Easy => easy,
                Difficulty::Medium => medium,
                Difficulty::Difficult => difficult,
            },
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for d in Difficulty::ALL {
            let p = self.probability(d);
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("correct probability for {d} items must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cohort {
    pub students: usize,
    pub sessions_per_student: usize,
    pub seed: u64,
    pub education_level: EducationLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionOutcome {
    pub session_id: String,
    pub items: usize,
    /// Weighted percentage over graded items.
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnerOutcome {
    pub learner_id: String,
    /// Mean of the learner's session percentages.
    pub score: f64,
    pub sessions: Vec<SessionOutcome>,
    /// Knowledge levels stored in the profile after the last session.
    pub levels: BTreeMap<TopicId, KnowledgeLevel>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LevelCounts {
    pub low: usize,
    pub good: usize,
    pub high: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub seed: u64,
    pub students: usize,
    pub sessions_per_student: usize,
    pub policy: SimulationPolicy,
    pub cohort_mean: f64,
    pub learners: Vec<LearnerOutcome>,
    /// Per topic, how many learners ended at each level.
    pub topic_levels: BTreeMap<TopicId, LevelCounts>,
    pub engagement: EngagementCounters,
}

impl SimulationReport {
    /// `learner_id,score` rows, scores printed with full round-trip precision.
    pub fn scores_csv(&self) -> String {
        let mut out = String::from("learner_id,score\n");
        for l in &self.learners {
            out.push_str(&format!("{},{}\n", l.learner_id, l.score));
        }
        out
    }
}

/// Generator for session `index`. Each session gets its own stream, so
/// sessions are independent of the order they run in.
pub fn session_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn simulate(
    bank: &QuestionBank,
    criteria: &SelectionCriteria,
    policy: &SimulationPolicy,
    cohort: &Cohort,
) -> Result<SimulationReport, String> {
    policy.validate()?;
    if cohort.students == 0 || cohort.sessions_per_student == 0 {
        return Err("a cohort needs at least one student and one session per student".into());
    }
    let start = DateTime::<Utc>::from_timestamp(1_700_000_000, 0).expect("valid timestamp");
    let mut learners = Vec::with_capacity(cohort.students);
    let mut log = Vec::new();
    for s in 0..cohort.students {
        let learner_id = format!("learner-{s:04}");
        let mut profile = LearnerProfile::new(learner_id.clone(), cohort.education_level);
        let mut sessions = Vec::with_capacity(cohort.sessions_per_student);
        for k in 0..cohort.sessions_per_student {
            let index = (s * cohort.sessions_per_student + k) as u64;
            let mut rng = session_rng(cohort.seed, index);
            let mut criteria = criteria.clone();
            let drawn = rng.next_u64();
            criteria.seed.get_or_insert(drawn);
            let selection =
                select(bank, &criteria, Learner::Registered(&profile)).map_err(|e| format!("{learner_id}: {e}"))?;
            if selection.questions.is_empty() {
                let why = selection.diagnostic.unwrap_or_default();
                return Err(format!("{learner_id}: empty selection: {why}"));
            }
            let session_id = format!("sim-{index:06}");
            let mut session = AssessmentSession::new(session_id.clone(), criteria, selection.ids());
            for q in &selection.questions {
                let payload = if rng.gen_bool(policy.probability(q.difficulty)) {
                    correct_response(q)
                } else {
                    wrong_response(q).unwrap_or_else(|| correct_response(q))
                };
                session.record_answer(bank, Answer::new(q.id.clone(), payload)).map_err(|e| e.to_string())?;
            }
            session.submit(bank).map_err(|e| e.to_string())?;
            let at = start + TimeDelta::minutes(index as i64);
            session.finalize(at).map_err(|e| e.to_string())?;
            profile.update(&session).map_err(|e| e.to_string())?;
            let items = &session.results().expect("submitted").items;
            let percent = overall_percent(bank, items)
                .ok_or_else(|| format!("{learner_id}: the selection contains no graded items"))?;
            sessions.push(SessionOutcome { session_id, items: items.len(), percent });
            log.push(RunEvent { taker: learner_id.clone(), timestamp: at });
        }
        let score = sessions.iter().map(|s| s.percent).sum::<f64>() / sessions.len() as f64;
        learners.push(LearnerOutcome { learner_id, score, sessions, levels: profile.knowledge().clone() });
    }
    let mut topic_levels: BTreeMap<TopicId, LevelCounts> = BTreeMap::new();
    for l in &learners {
        for (topic, level) in &l.levels {
            let counts = topic_levels.entry(topic.clone()).or_default();
            match level {
                KnowledgeLevel::Low => counts.low += 1,
                KnowledgeLevel::Good => counts.good += 1,
                KnowledgeLevel::High => counts.high += 1,
            }
        }
    }
    let cohort_mean = learners.iter().map(|l| l.score).sum::<f64>() / learners.len() as f64;
    Ok(SimulationReport {
        seed: cohort.seed,
        students: cohort.students,
        sessions_per_student: cohort.sessions_per_student,
        policy: *policy,
        cohort_mean,
        learners,
        topic_levels,
        engagement: engagement_counters(&log),
    })
}
