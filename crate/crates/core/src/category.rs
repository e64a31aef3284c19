use serde::{Deserialize, Serialize};

/// Annotation class. Ids are positive and unique within a project.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Category {
    pub id: u32,
    pub comment: String,
    pub color: [u8; 3],
    #[serde(default)]
    pub deleted: bool,
}

impl Category {
    pub fn new(id: u32, comment: impl Into<String>, color: [u8; 3]) -> Self {
        Category {
            id,
            comment: comment.into(),
            color,
            deleted: false,
        }
    }
}
