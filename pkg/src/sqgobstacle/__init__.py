"""Critical SQG outside a moving rigid disk."""
