"""FastAPI application package"""
