import os
from dotenv import load_dotenv
from typing import Dict, Any
import json

# Load environment variables from .env file
load_dotenv()

class Config:
    """Configuration manager for WorkflowForge"""

    def __init__(self):
        self.config = self._load_config()

        # Load additional config from JSON file if exists
        config_file = os.getenv('CONFIG_FILE', 'config.json')
        if os.path.exists(config_file):
            with open(config_file, 'r') as f:
                self.merge(json.load(f))

    def _load_config(self) -> Dict[str, Any]:
        """Load configuration from environment and config files"""
        config = {
            # Task specification defaults
            'spec': {
                'default_budget': int(os.getenv('DEFAULT_BUDGET', '100000')),
                'default_max_repair_rounds': int(os.getenv('DEFAULT_MAX_REPAIR_ROUNDS', '3')),
                'repair_round_cap': 16,
            },

            # Retrieval Configuration
            'retrieval': {
                'top_k': int(os.getenv('RETRIEVAL_TOP_K', '3')),
                'clause_connectives': ['and then', 'then', ';'],
            },

            # Synthesis Configuration
            'synthesis': {
                'allow_default_agent': os.getenv('ALLOW_DEFAULT_AGENT', 'true').lower() == 'true',
                'default_executor': os.getenv('DEFAULT_EXECUTOR', 'agent:default'),
            },

            # Sandbox wrapping Configuration
            'sandbox': {
                'max_rounds': int(os.getenv('SANDBOX_MAX_ROUNDS', '3')),
                'base_environment': os.getenv('SANDBOX_BASE_ENV', 'python:3.11-slim'),
                'docker_binary': os.getenv('DOCKER_BINARY', 'docker'),
            },

            # Runtime Configuration
            'runtime': {
                'max_workers': int(os.getenv('MAX_WORKERS', '4')),
                'executor_url': os.getenv('WORKFLOW_EXECUTOR_URL', ''),
                'executor_api_key': os.getenv('WORKFLOW_EXECUTOR_API_KEY', ''),
                'executor_model': os.getenv('WORKFLOW_EXECUTOR_MODEL', 'gpt-4o-mini'),
                'request_timeout': int(os.getenv('REQUEST_TIMEOUT', '60')),
            },

            # Review thresholds
            'review': {
                'min_output_confidence': float(os.getenv('MIN_OUTPUT_CONFIDENCE', '0.5')),
                'max_test_fail_ratio': float(os.getenv('MAX_TEST_FAIL_RATIO', '0.4')),
                'max_tool_errors': int(os.getenv('MAX_TOOL_ERRORS', '2')),
                'budget_warn_ratio': float(os.getenv('BUDGET_WARN_RATIO', '0.9')),
            },

            # Output Configuration
            'output': {
                'log_level': os.getenv('LOG_LEVEL', 'WARNING'),
                'log_file': os.getenv('LOG_FILE', ''),
            }
        }

        return config

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value by dot notation (e.g., 'runtime.max_workers')"""
        keys = key.split('.')
        value = self.config

        for k in keys:
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default

        return value

    def has_remote_executor(self) -> bool:
        """Check that the remote executor endpoint is configured"""
        return bool(self.get('runtime.executor_url'))

    def merge(self, overlay: Dict[str, Any]) -> None:
        """Merge a JSON overlay section by section; unknown sections are added whole"""
        for section, values in overlay.items():
            if isinstance(values, dict) and isinstance(self.config.get(section), dict):
                self.config[section].update(values)
            else:
                self.config[section] = values

# Global config instance
config = Config()
