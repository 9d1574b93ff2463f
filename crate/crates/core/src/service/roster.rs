//! Course roster: which condition each student is in per assignment, and
//! which sections each grader covers.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::domain::Condition;
use crate::error::DomainError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudentEntry {
    pub student_id: String,
    pub section: String,
    /// Condition per assignment id.
    pub conditions: BTreeMap<String, Condition>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraderEntry {
    pub grader_id: String,
    pub sections: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Roster {
    pub students: Vec<StudentEntry>,
    pub graders: Vec<GraderEntry>,
}

impl Roster {
    pub fn from_json(source: &str) -> Result<Self, DomainError> {
        serde_json::from_str(source).map_err(DomainError::Parse)
    }

    pub fn student(&self, student_id: &str) -> Option<&StudentEntry> {
        self.students.iter().find(|s| s.student_id == student_id)
    }

    pub fn condition_for(&self, student_id: &str, assignment_id: &str) -> Option<Condition> {
        self.student(student_id).and_then(|s| s.conditions.get(assignment_id).copied())
    }

    pub fn grader_covers(&self, grader_id: &str, student_id: &str) -> bool {
        let Some(student) = self.student(student_id) else {
            return false;
        };
        self.graders.iter().any(|g| g.grader_id == grader_id && g.sections.contains(&student.section))
    }
}
