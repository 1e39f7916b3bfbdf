# Service layer package initialization
