"""Settings, error hierarchy and file output shared by every layer."""
