use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed polyhedral function: {0}")]
    Shape(String),

    #[error("function is not convex")]
    NotConvex,

    #[error("point ({x}, {y}) is outside the epigraph (requires cash >= {required})")]
    OutsideEpigraph {
        x: String,
        y: String,
        required: String,
    },

    #[error("malformed event tree: {0}")]
    Tree(String),

    #[error("invalid instance: {0}")]
    Instance(String),

    #[error("value function degenerated to -inf at node `{node}`")]
    Degenerate { node: String },

    #[error("invalid stopping time: {0}")]
    StoppingTime(String),

    #[error("size guard exceeded: {0}")]
    TooLarge(String),

    #[error("linear program is {0}")]
    Lp(&'static str),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid strategy: {0}")]
    Strategy(String),

    #[error("construction invariant broken at node `{node}`: {what}")]
    Invariant { node: String, what: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
