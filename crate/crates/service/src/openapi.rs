//! The description document served at `/spec`.

use serde_json::{json, Value};

fn error_response(description: &str) -> Value {
    json!({ "description": description, "content": { "application/json": { "schema": { "$ref": "#/components/schemas/Error" } } } })
}

fn json_response(description: &str, schema: Value) -> Value {
    json!({ "description": description, "content": { "application/json": { "schema": schema } } })
}

fn schema_ref(name: &str) -> Value {
    json!({ "$ref": format!("#/components/schemas/{name}") })
}

fn array_of(name: &str) -> Value {
    json!({ "type": "array", "items": schema_ref(name) })
}

pub fn document() -> Value {
    let id_param = json!([{ "name": "id", "in": "path", "required": true, "schema": { "type": "string" } }]);
    json!({
        "openapi": "3.0.3",
        "info": {
            "title": "crisis-al annotation service",
            "version": env!("CARGO_PKG_VERSION"),
            "description": "Live active-learning sessions for labeling disaster-related short texts."
        },
        "paths": {
            "/health": { "get": { "responses": { "200": json_response("Service is up", json!({ "type": "object" })) } } },
            "/corpora": { "get": {
                "summary": "List corpora in the data directory",
                "responses": { "200": json_response("Corpora", array_of("CorpusInfo")) }
            } },
            "/corpora/{name}": { "put": {
                "summary": "Upload a JSON-lines corpus ({\"id\", \"text\", \"lang\"?, \"label\": 0|1|null, \"source\"?} per line)",
                "parameters": [{ "name": "name", "in": "path", "required": true, "schema": { "type": "string" } }],
                "requestBody": { "content": { "application/x-ndjson": { "schema": { "type": "string" } } } },
                "responses": {
                    "201": json_response("Stored", schema_ref("CorpusInfo")),
                    "400": error_response("Malformed corpus or name")
                }
            } },
            "/sessions": {
                "post": {
                    "summary": "Create a session; the random seed batch is pending immediately",
                    "requestBody": { "content": { "application/json": { "schema": schema_ref("CreateSession") } } },
                    "responses": {
                        "201": json_response("Created", schema_ref("SessionHandle")),
                        "400": error_response("Invalid config or request"),
                        "404": error_response("Unknown corpus or embeddings")
                    }
                },
                "get": { "responses": { "200": json_response("All sessions", array_of("SessionHandle")) } }
            },
            "/sessions/{id}": { "get": {
                "parameters": id_param,
                "responses": {
                    "200": json_response("Session with progress", schema_ref("SessionView")),
                    "404": error_response("Unknown session")
                }
            } },
            "/sessions/{id}/batch": { "get": {
                "summary": "The pending batch, in query order",
                "parameters": id_param,
                "responses": {
                    "200": json_response("Pending items", array_of("AnnotationItem")),
                    "404": error_response("Unknown session"),
                    "409": error_response("No batch pending (ready_to_query or finished)")
                }
            } },
            "/sessions/{id}/labels": { "post": {
                "summary": "Label the whole pending batch; retrains and issues the next batch",
                "parameters": id_param,
                "requestBody": { "content": { "application/json": { "schema": schema_ref("LabelSubmission") } } },
                "responses": {
                    "200": json_response("Metrics of the completed round", schema_ref("RoundMetrics")),
                    "400": error_response("Malformed body"),
                    "404": error_response("Unknown session"),
                    "409": error_response("Missing or extra ids, annotator conflict, wrong phase, or a concurrent submission")
                }
            } },
            "/sessions/{id}/metrics": { "get": {
                "parameters": id_param,
                "responses": {
                    "200": json_response("One record per completed round", array_of("RoundMetrics")),
                    "404": error_response("Unknown session")
                }
            } },
            "/sessions/{id}/export": { "get": {
                "summary": "Human-assigned labels as JSON lines",
                "parameters": id_param,
                "responses": {
                    "200": { "description": "One ExportRecord per line", "content": { "application/x-ndjson": { "schema": schema_ref("ExportRecord") } } },
                    "404": error_response("Unknown session")
                }
            } }
        },
        "components": { "schemas": {
            "Error": { "type": "object", "required": ["error", "status"], "properties": {
                "error": { "type": "string" },
                "status": { "type": "integer" },
                "conflicts": { "type": "array", "items": { "type": "string" } }
            } },
            "Label": { "type": "integer", "enum": [0, 1], "description": "0 = unrelated, 1 = related" },
            "Phase": { "type": "string", "enum": ["awaiting_labels", "ready_to_query", "finished"] },
            "Strategy": { "type": "string", "enum": ["random", "lc", "pe", "bt", "gcs", "dal"] },
            "Hyperparams": { "type": "object", "properties": {
                "learning_rate": { "type": "number", "default": 0.5 },
                "l2_penalty": { "type": "number", "default": 0.0001 },
                "epochs": { "type": "integer", "default": 200 },
                "seed": { "type": "integer", "default": 0 },
                "class_weighting": { "type": "boolean", "default": false }
            } },
            "SessionConfig": { "type": "object", "properties": {
                "rounds": { "type": "integer", "minimum": 1, "default": 10 },
                "batch_size": { "type": "integer", "minimum": 1, "default": 20 },
                "seed_batch_size": { "type": "integer", "minimum": 1, "default": 20 },
                "strategy": { "allOf": [schema_ref("Strategy")], "default": "gcs" },
                "seed": { "type": "integer", "default": 0 },
                "feature_source": { "type": "string", "enum": ["tfidf", "external"], "default": "tfidf" },
                "min_df": { "type": "integer", "minimum": 1, "default": 1 },
                "max_features": { "type": "integer", "nullable": true },
                "model": schema_ref("Hyperparams"),
                "unlabeled_limit": { "type": "integer", "nullable": true }
            } },
            "CreateSession": { "type": "object", "required": ["corpus"], "properties": {
                "corpus": { "type": "string" },
                "config": schema_ref("SessionConfig"),
                "test_corpus": { "type": "string", "description": "Gold-labeled corpus used as the test partition" },
                "split": { "type": "object", "properties": {
                    "test_fraction": { "type": "number", "default": 0.2 },
                    "seed": { "type": "integer" }
                } },
                "embeddings": { "type": "string" },
                "dual_annotation": { "type": "boolean", "default": false }
            } },
            "SessionHandle": { "type": "object", "required": ["session_id", "created_at", "corpus", "config", "dual_annotation", "status"], "properties": {
                "session_id": { "type": "string" },
                "created_at": { "type": "string", "format": "date-time" },
                "corpus": { "type": "string" },
                "config": schema_ref("SessionConfig"),
                "dual_annotation": { "type": "boolean" },
                "status": schema_ref("Phase")
            } },
            "SessionView": { "allOf": [schema_ref("SessionHandle"), { "type": "object", "properties": {
                "round": { "type": "integer" },
                "labeled_count": { "type": "integer" },
                "pending": { "type": "integer" },
                "test_size": { "type": "integer" }
            } }] },
            "AnnotationItem": { "type": "object", "required": ["doc_id", "text", "lang", "round", "position_in_batch"], "properties": {
                "doc_id": { "type": "string" },
                "text": { "type": "string" },
                "lang": { "type": "string" },
                "round": { "type": "integer" },
                "position_in_batch": { "type": "integer" }
            } },
            "LabelSubmission": { "oneOf": [
                { "type": "object", "additionalProperties": schema_ref("Label"), "description": "doc_id -> label" },
                { "type": "object", "required": ["annotations"], "properties": { "annotations": {
                    "type": "array", "minItems": 2, "maxItems": 2,
                    "items": { "type": "object", "required": ["annotator", "labels"], "properties": {
                        "annotator": { "type": "string" },
                        "labels": { "type": "object", "additionalProperties": schema_ref("Label") }
                    } }
                } } }
            ] },
            "RoundMetrics": { "type": "object", "required": ["round", "labeled_count", "accuracy", "f1_unrelated", "f1_related"], "additionalProperties": false, "properties": {
                "round": { "type": "integer" },
                "labeled_count": { "type": "integer" },
                "accuracy": { "type": "number" },
                "f1_unrelated": { "type": "number" },
                "f1_related": { "type": "number" }
            } },
            "ExportRecord": { "type": "object", "required": ["id", "text", "lang", "label", "round"], "properties": {
                "id": { "type": "string" },
                "text": { "type": "string" },
                "lang": { "type": "string" },
                "label": schema_ref("Label"),
                "round": { "type": "integer" }
            } },
            "CorpusInfo": { "type": "object", "required": ["name", "documents", "gold_labeled"], "properties": {
                "name": { "type": "string" },
                "documents": { "type": "integer" },
                "gold_labeled": { "type": "integer" }
            } }
        } }
    })
}
